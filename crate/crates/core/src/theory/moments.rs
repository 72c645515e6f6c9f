use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::sim::params::LifParams;
use crate::sim::weights::WeightSpec;

/// Drift and noise amplitude of the equivalent Ornstein–Uhlenbeck input.
///
/// `sigma` is the amplitude that enters the rate integral, `sigma² = τ Σ r w²`.
/// The stationary membrane variance of the free OU process is half of that;
/// see [`DiffusionMoments::membrane_variance`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionMoments {
    pub mu: f64,
    pub sigma: f64,
}

impl DiffusionMoments {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        ensure(mu.is_finite() && sigma.is_finite() && sigma >= 0.0, || {
            format!("moments need finite mu and sigma >= 0, got ({mu}, {sigma})")
        })?;
        Ok(DiffusionMoments { mu, sigma })
    }

    /// `(τ/2) Σ r w²`, the variance of an unthresholded membrane.
    pub fn membrane_variance(&self) -> f64 {
        0.5 * self.sigma * self.sigma
    }

    /// Moments for `n_sources` Poisson sources at `rate`, each connected with the
    /// weight spec's connection probability and weight distribution.
    pub fn from_population(params: &LifParams, rate: f64, n_sources: usize, spec: &WeightSpec) -> Result<Self> {
        ensure(rate >= 0.0 && rate.is_finite(), || format!("input rate must be >= 0, got {rate}"))?;
        spec.validate()?;
        let (m1, m2) = spec.connection_moments();
        let r_total = rate * n_sources as f64 * spec.connection_prob;
        DiffusionMoments::new(params.i_ext + params.tau * r_total * m1, (params.tau * r_total * m2).sqrt())
    }
}

/// `mu = I + τ Σ r_k w_k`, `sigma² = τ Σ r_k w_k²` for inputs `(r_k, w_k)`.
pub fn diffusion_moments(params: &LifParams, inputs: &[(f64, f64)]) -> Result<DiffusionMoments> {
    ensure(inputs.iter().all(|&(r, w)| r >= 0.0 && r.is_finite() && w.is_finite()), || {
        "input rates must be finite and >= 0".into()
    })?;
    let s1: f64 = inputs.iter().map(|(r, w)| r * w).sum();
    let s2: f64 = inputs.iter().map(|(r, w)| r * w * w).sum();
    DiffusionMoments::new(params.i_ext + params.tau * s1, (params.tau * s2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_inputs() {
        let p = LifParams::standard(0.8, 1e-3);
        let m = diffusion_moments(&p, &[]).unwrap();
        assert_eq!((m.mu, m.sigma), (0.8, 0.0));
    }

    #[test]
    fn balanced_aggregate() {
        // 1000 excitatory and 1000 inhibitory connections at 50 Hz each.
        let p = LifParams::standard(0.8, 1e-3);
        let m = diffusion_moments(&p, &[(25_000.0, 0.01), (25_000.0, -0.01)]).unwrap();
        assert!((m.mu - 0.8).abs() < 1e-15);
        assert!((m.sigma * m.sigma - 0.05).abs() < 1e-15);
        assert!((m.membrane_variance() - 0.025).abs() < 1e-15);
    }

    #[test]
    fn population_form_agrees() {
        let p = LifParams::standard(0.8, 1e-3);
        let spec = WeightSpec::two_point(0.01, 0.5);
        let a = DiffusionMoments::from_population(&p, 50.0, 2000, &spec).unwrap();
        let b = diffusion_moments(&p, &[(25_000.0, 0.01), (25_000.0, -0.01)]).unwrap();
        assert!((a.mu - b.mu).abs() < 1e-15 && (a.sigma - b.sigma).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_rates() {
        let p = LifParams::standard(0.0, 1e-3);
        assert!(diffusion_moments(&p, &[(-1.0, 0.1)]).is_err());
    }
}
