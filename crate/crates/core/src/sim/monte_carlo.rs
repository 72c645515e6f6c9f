//! Repeated single-population runs with Poisson input.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correction::Correction;
use crate::error::{ensure, Result};
use crate::math::stats::{mean, standard_error};
use crate::rng::{derive_seed, STREAM_INPUT, STREAM_WEIGHTS};
use crate::sim::network::{run_network, LayerRun, RunOptions};
use crate::sim::params::LifParams;
use crate::sim::poisson::poisson_spikes;
use crate::sim::population::SpikeTiming;
use crate::sim::weights::{LayerTopology, WeightSpec};

/// One population of `n_neurons` driven by `n_sources` Poisson sources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub params: LifParams,
    pub n_neurons: usize,
    pub n_sources: usize,
    pub input_rate: f64,
    pub weights: WeightSpec,
    /// Recorded time (s), after the warm-up.
    pub duration: f64,
    pub warmup: f64,
    #[serde(default)]
    pub correction: Correction,
    #[serde(default)]
    pub timing: SpikeTiming,
}

/// Mean and standard error over repeats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub mean: f64,
    pub se: f64,
    pub repeats: usize,
    /// Corrected spikes per neuron per second, averaged over repeats.
    pub corrected_rate: f64,
}

impl PopulationConfig {
    pub fn steps(&self) -> (usize, usize) {
        let warm = (self.warmup / self.params.dt).round() as usize;
        let rec = ((self.duration / self.params.dt).round() as usize).max(1);
        (warm, warm + rec)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.weights.validate()?;
        ensure(self.n_neurons > 0 && self.n_sources > 0, || "population needs neurons and sources".into())?;
        ensure(self.duration > 0.0 && self.warmup >= 0.0, || "duration must be > 0 and warm-up >= 0".into())
    }

    /// One repeat. Weights, input and correction draws all derive from `seed`
    /// and `repeat`.
    pub fn run_once(&self, seed: u64, repeat: u64, record: RunOptions) -> Result<LayerRun> {
        self.validate()?;
        let (warm, total) = self.steps();
        let layer = LayerTopology::realise(self.n_sources, self.n_neurons, &self.weights, derive_seed(seed, &[STREAM_WEIGHTS, repeat]))?;
        let input = poisson_spikes(self.input_rate, self.n_sources, total, self.params.dt, derive_seed(seed, &[STREAM_INPUT, repeat]))?;
        let opts = RunOptions { warmup_steps: warm, seed: derive_seed(seed, &[repeat]), timing: self.timing, ..record };
        let mut run = run_network(std::slice::from_ref(&layer), &self.params, &input, self.correction, &opts)?;
        Ok(run.layers.remove(0))
    }

    /// Population rate over `repeats` independent repeats, run in parallel.
    pub fn estimate(&self, repeats: usize, seed: u64) -> Result<RateEstimate> {
        ensure(repeats >= 1, || "need at least one repeat".into())?;
        let runs: Vec<(f64, f64)> = (0..repeats as u64)
            .into_par_iter()
            .map(|r| {
                let run = self.run_once(seed, r, RunOptions::default())?;
                let secs = run.raster.duration() * self.n_neurons as f64;
                Ok((run.rate, run.corrected_spikes as f64 / secs))
            })
            .collect::<Result<_>>()?;
        let rates: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let corr: Vec<f64> = runs.iter().map(|r| r.1).collect();
        Ok(RateEstimate { mean: mean(&rates), se: standard_error(&rates), repeats, corrected_rate: mean(&corr) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PopulationConfig {
        PopulationConfig {
            params: LifParams::standard(0.8, 1e-3),
            n_neurons: 100,
            n_sources: 400,
            input_rate: 50.0,
            weights: WeightSpec::two_point(0.02, 0.5),
            duration: 0.2,
            warmup: 0.05,
            correction: Correction::None,
            timing: SpikeTiming::IntervalStart,
        }
    }

    #[test]
    fn repeatable() {
        let a = cfg().estimate(3, 5).unwrap();
        let b = cfg().estimate(3, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.se > 0.0);
    }

    #[test]
    fn correction_only_adds_spikes_on_average() {
        let plain = cfg().estimate(4, 1).unwrap();
        let corrected = PopulationConfig { correction: Correction::RandomWalk, ..cfg() }.estimate(4, 1).unwrap();
        assert!(corrected.mean > plain.mean);
        assert!(corrected.corrected_rate > 0.0);
        assert_eq!(plain.corrected_rate, 0.0);
    }

    #[test]
    fn step_counts() {
        let c = PopulationConfig { duration: 1.0, warmup: 0.1, params: LifParams::standard(0.8, 0.02), ..cfg() };
        assert_eq!(c.steps(), (5, 55));
    }
}
