//! Stationary rate and membrane density of LIF neurons under Poisson input.

pub mod density;
pub mod moments;
pub mod shot_noise;
pub mod siegert;
pub mod threshold;

pub use density::{Histogram, MembraneDensity};
pub use moments::{diffusion_moments, DiffusionMoments};
pub use shot_noise::{shot_noise_rate, ShotNoiseSpec};
pub use siegert::{siegert_rate, stationary_distribution_diffusion};
pub use threshold::{threshold_integration_lif, DEFAULT_GRID_SIZE};
