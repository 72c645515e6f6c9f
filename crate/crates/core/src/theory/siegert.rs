//! Stationary LIF rate under white-noise (diffusion) input.

use crate::error::{Error, Result};
use crate::math::quad::{integrate, QuadOptions};
use crate::math::special::{erfcx, siegert_kernel};
use crate::sim::params::LifParams;
use crate::theory::density::MembraneDensity;
use crate::theory::moments::DiffusionMoments;

const SQRT_PI: f64 = 1.772_453_850_905_516;

fn require_noise(m: &DiffusionMoments) -> Result<()> {
    if m.sigma > 0.0 && m.sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "sigma = {} : the noise-free (mean-driven) limit is not handled by the diffusion formula",
            m.sigma
        )))
    }
}

/// `1 / (τ √π ∫_{(V_r-μ)/σ}^{(V_th-μ)/σ} e^{x²}(1 + erf x) dx)`.
///
/// The integrand is scaled by `e^{-b²}` (with `b` the upper limit) when `b > 0`
/// so that strongly subthreshold inputs underflow to a zero rate instead of
/// overflowing.
pub fn siegert_rate(params: &LifParams, m: &DiffusionMoments) -> Result<f64> {
    params.validate()?;
    require_noise(m)?;
    let a = (params.v_r - m.mu) / m.sigma;
    let b = (params.v_th - m.mu) / m.sigma;
    let shift = if b > 0.0 { b * b } else { 0.0 };
    let scaled = |x: f64| {
        if x < 0.0 {
            erfcx(-x) * (-shift).exp()
        } else {
            2.0 * (x * x - shift).exp() - erfcx(x) * (-shift).exp()
        }
    };
    // For large b the scaled integrand lives in a layer of width ~1/b below b,
    // which a single adaptive pass can step over entirely.
    let mut cuts = vec![a, b];
    if b > 1.0 {
        for c in [0.0, b - 30.0 / b, b - 1.0 / b] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let opts = QuadOptions { rel_tol: 1e-10, abs_tol: 0.0, max_intervals: 4000 };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(scaled, w[0], w[1], opts)?.value;
    }
    if !(total > 0.0) {
        return Err(Error::Numerical(format!("rate integral is {} for mu = {}, sigma = {}", total, m.mu, m.sigma)));
    }
    Ok((-shift).exp() / (params.tau * SQRT_PI * total))
}

/// Closed-form stationary density,
/// `P(v) = r (2τ/σ²) ∫_{max(v, V_r)}^{V_th} exp(((u-μ)² - (v-μ)²)/σ²) du`,
/// zero above threshold.
pub fn stationary_distribution_diffusion(params: &LifParams, m: &DiffusionMoments, grid: &[f64]) -> Result<MembraneDensity> {
    let rate = siegert_rate(params, m)?;
    let s2 = m.sigma * m.sigma;
    let c = rate * 2.0 * params.tau / s2;
    let mut density = Vec::with_capacity(grid.len());
    for &v in grid {
        if v >= params.v_th {
            density.push(0.0);
            continue;
        }
        let lo = v.max(params.v_r);
        let dv = (v - m.mu) * (v - m.mu);
        let q = integrate(|u| (((u - m.mu) * (u - m.mu) - dv) / s2).exp(), lo, params.v_th, QuadOptions::rel(1e-11))?;
        density.push(c * q.value);
    }
    MembraneDensity::new(grid.to_vec(), density)
}

/// The unscaled integrand, exposed for diagnostics.
pub fn rate_integrand(x: f64) -> f64 {
    siegert_kernel(x)
}
