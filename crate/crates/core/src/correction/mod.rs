//! Within-step threshold-crossing corrections.
//!
//! A discrete-time simulator only sees the membrane at the end of each step.
//! A neuron that ends below threshold may still have crossed it while its
//! inputs were arriving. The corrections here turn some of those neurons
//! into spikers, using one random draw per candidate neuron.

mod permutation;
mod random_walk;
mod wiener;

use std::sync::atomic::{AtomicU64, Ordering};

use log::debug;
use serde::{Deserialize, Serialize};

pub use permutation::{permutation_step, permutation_step_batch};
pub use random_walk::{
    lif_barrier, random_walk_endpoint_pmf, rw_barrier, rw_probability_nk, rw_spike_probability, BarrierDecay, RwQuery,
};
pub use wiener::{
    wiener_query_from_step, wiener_query_general, wiener_spike_probability, WienerProbability, WienerQuery,
};

use crate::error::{Error, Result};
use crate::rng::unit_f64;
use crate::sim::params::LifParams;
use crate::sim::weights::{LayerTopology, WeightMatrix};

/// Everything a correction may look at for one neuron that ended the step
/// below threshold.
#[derive(Clone, Copy, Debug)]
pub struct NeuronStep<'a> {
    pub params: &'a LifParams,
    pub v_prev: f64,
    /// `alpha v_prev + (1 - alpha) I`.
    pub v_det: f64,
    pub net_input: f64,
    pub n_exc: u32,
    pub n_inh: u32,
    /// Nonzero weights received this step, in presynaptic order. Only filled
    /// when [`SpikeCorrection::needs_weights`] is true.
    pub weights: &'a [f64],
}

pub trait SpikeCorrection: Send + Sync {
    fn needs_weights(&self) -> bool {
        false
    }

    /// Decide whether the neuron crossed threshold within the step. `draw`
    /// is 64 uniformly random bits reserved for this neuron and step.
    fn crossed(&self, step: &NeuronStep<'_>, draw: u64) -> bool;
}

pub struct RandomWalkCorrection {
    pub w: f64,
    pub decay: BarrierDecay,
}

impl SpikeCorrection for RandomWalkCorrection {
    fn crossed(&self, s: &NeuronStep<'_>, draw: u64) -> bool {
        let y = lif_barrier(s.params, s.v_prev, self.w, self.decay);
        let p = rw_spike_probability(&RwQuery { n_exc: s.n_exc as u64, n_inh: s.n_inh as u64, steps_needed: y });
        unit_f64(draw) < p
    }
}

pub struct WienerCorrection {
    pub mu_w: f64,
    pub sigma_w: f64,
    below_start: AtomicU64,
}

impl WienerCorrection {
    pub fn new(mu_w: f64, sigma_w: f64) -> Self {
        WienerCorrection { mu_w, sigma_w, below_start: AtomicU64::new(0) }
    }

    /// How many queries fell in the `w_end < m <= 0` case.
    pub fn barrier_below_start_count(&self) -> u64 {
        self.below_start.load(Ordering::Relaxed)
    }
}

impl SpikeCorrection for WienerCorrection {
    fn crossed(&self, s: &NeuronStep<'_>, draw: u64) -> bool {
        let n = s.n_exc + s.n_inh;
        let Some(q) = wiener_query_general(s.v_det, s.params.v_th, s.params.dt, self.mu_w, self.sigma_w, n, s.net_input)
        else {
            return false;
        };
        let p = wiener_spike_probability(&q);
        if p.barrier_below_start {
            self.below_start.fetch_add(1, Ordering::Relaxed);
            debug!("barrier below start: m = {}, w_end = {}", q.m, q.w_end);
        }
        unit_f64(draw) < p.p
    }
}

pub struct PermutationCorrection;

impl SpikeCorrection for PermutationCorrection {
    fn needs_weights(&self) -> bool {
        true
    }

    fn crossed(&self, s: &NeuronStep<'_>, draw: u64) -> bool {
        permutation_step(s.v_det, s.weights, s.params.v_th, draw)
    }
}

/// Correction selected by name in configs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    #[default]
    None,
    RandomWalk,
    /// Random walk with the interval-averaged barrier; a negative control.
    RandomWalkAlphaBar,
    Wiener,
    Permutation,
}

impl Correction {
    pub const ALL: [Correction; 5] =
        [Correction::None, Correction::RandomWalk, Correction::RandomWalkAlphaBar, Correction::Wiener, Correction::Permutation];

    pub fn name(&self) -> &'static str {
        match self {
            Correction::None => "none",
            Correction::RandomWalk => "random-walk",
            Correction::RandomWalkAlphaBar => "random-walk-alpha-bar",
            Correction::Wiener => "wiener",
            Correction::Permutation => "permutation",
        }
    }

    /// Instantiate the hook for one layer. Random-walk corrections need
    /// two-point weights; the Wiener correction takes the weight mean and
    /// spread from the layer's distribution.
    pub fn for_layer(&self, layer: &LayerTopology) -> Result<Option<Box<dyn SpikeCorrection>>> {
        Ok(match self {
            Correction::None => None,
            Correction::RandomWalk | Correction::RandomWalkAlphaBar => {
                let WeightMatrix::Signed { w, .. } = layer.matrix() else {
                    return Err(Error::Unsupported("the random-walk correction requires two-point (±w) weights".into()));
                };
                let decay = if *self == Correction::RandomWalk { BarrierDecay::Alpha } else { BarrierDecay::AlphaBar };
                Some(Box::new(RandomWalkCorrection { w: *w, decay }))
            }
            Correction::Wiener => {
                let (mu, sigma) = match layer.spec() {
                    Some(spec) => (spec.connection_moments().0, spec.connection_std()),
                    None => realised_moments(layer),
                };
                Some(Box::new(WienerCorrection::new(mu, sigma)))
            }
            Correction::Permutation => Some(Box::new(PermutationCorrection)),
        })
    }
}

impl std::fmt::Display for Correction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Correction::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown correction '{s}'")))
    }
}

fn realised_moments(layer: &LayerTopology) -> (f64, f64) {
    let (mut n, mut s1, mut s2) = (0usize, 0.0, 0.0);
    for post in 0..layer.n_post() {
        for pre in 0..layer.n_pre() {
            let w = layer.weight(post, pre);
            if w != 0.0 {
                n += 1;
                s1 += w;
                s2 += w * w;
            }
        }
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    let m = s1 / n as f64;
    (m, (s2 / n as f64 - m * m).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::weights::WeightSpec;

    #[test]
    fn names_roundtrip() {
        for c in Correction::ALL {
            assert_eq!(c.name().parse::<Correction>().unwrap(), c);
        }
        assert!("bogus".parse::<Correction>().is_err());
    }

    #[test]
    fn random_walk_needs_two_point() {
        let g = LayerTopology::realise(10, 10, &WeightSpec::gaussian(0.0, 0.1, 1.0), 1).unwrap();
        assert!(Correction::RandomWalk.for_layer(&g).is_err());
        assert!(Correction::Wiener.for_layer(&g).unwrap().is_some());
        assert!(Correction::None.for_layer(&g).unwrap().is_none());
    }

    #[test]
    fn realised_moments_of_explicit_matrix() {
        let l = LayerTopology::from_rows(&[vec![0.1, -0.1], vec![0.0, 0.3]]).unwrap();
        let (m, s) = realised_moments(&l);
        assert!((m - 0.1).abs() < 1e-15);
        assert!((s * s - (0.11 / 3.0 - 0.01)).abs() < 1e-15);
    }
}
