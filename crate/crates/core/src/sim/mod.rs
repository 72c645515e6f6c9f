//! Discrete-time simulation of feed-forward LIF populations.

pub mod monte_carlo;
pub mod network;
pub mod params;
pub mod poisson;
pub mod population;
pub mod raster;
pub mod weights;

pub use network::{run_network, LayerBlueprint, LayerRun, LayerSource, MembraneTrace, NetworkRun, RunOptions};
pub use monte_carlo::{PopulationConfig, RateEstimate};
pub use params::LifParams;
pub use poisson::poisson_spikes;
pub use population::{step_population, SimState, SpikeTiming, StepOutput, Stepper};
pub use raster::{BinInputs, SpikeRaster};
pub use weights::{Balance, LayerTopology, WeightKind, WeightMatrix, WeightSpec};
