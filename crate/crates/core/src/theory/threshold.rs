//! Rate and stationary density by integrating the flux equation downward
//! from threshold.

use crate::error::{ensure, Error, Result};
use crate::math::trapz;
use crate::sim::params::LifParams;
use crate::theory::density::MembraneDensity;
use crate::theory::moments::DiffusionMoments;

pub const DEFAULT_GRID_SIZE: usize = 4096;
const MAX_DOUBLINGS: usize = 8;
const MASS_TOL: f64 = 1e-6;

/// Stationary density and rate of a LIF neuron with diffusion input.
///
/// The unnormalised density `p` and flux `j` satisfy
/// `(μ - v)/τ · p - (σ²/2τ) p' = j`, with `j = 1` between reset and threshold
/// and `0` below reset. Starting from `p(V_th) = 0`, the equation is stepped
/// down to `v_lb` with an exponential integrator; the rate is `1/∫p` and the
/// returned density is `p` times the rate.
///
/// `grid_size` sets the number of nodes between `V_th` and the initial lower
/// bound (default `V_r - 10σ`). The bound is then pushed down, at the same
/// spacing, until the rate changes by less than 1e-6. An explicit `v_lb` is
/// checked once against twice its depth.
pub fn threshold_integration_lif(
    params: &LifParams,
    m: &DiffusionMoments,
    v_lb: Option<f64>,
    grid_size: usize,
) -> Result<(MembraneDensity, f64)> {
    params.validate()?;
    ensure(m.sigma > 0.0, || "threshold integration needs sigma > 0".into())?;
    ensure(grid_size >= 512, || format!("grid_size must be >= 512, got {grid_size}"))?;
    let explicit = v_lb.is_some();
    let v_lb = v_lb.unwrap_or(params.v_r - 10.0 * m.sigma);
    ensure(v_lb < params.v_r, || format!("v_lb = {v_lb} must lie below v_r = {}", params.v_r))?;

    let depth0 = params.v_th - v_lb;
    // Spacing that puts V_r exactly on a node.
    let reset_steps = (((grid_size - 1) as f64) * (params.v_th - params.v_r) / depth0).ceil().max(1.0) as usize;
    let h = (params.v_th - params.v_r) / reset_steps as f64;

    let mut p = vec![0.0f64];
    let mut depth = depth0;
    let mut prev_rate: Option<f64> = None;
    for _ in 0..=MAX_DOUBLINGS {
        let nodes = (depth / h).ceil() as usize;
        extend_backward(&mut p, nodes, h, reset_steps, params, m)?;
        let area = trapz_uniform(&p[..=nodes], h);
        let rate = 1.0 / area;
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::Numerical(format!("threshold integration gave rate {rate}")));
        }
        if let Some(r0) = prev_rate {
            let change = ((rate - r0) / rate).abs();
            if change < MASS_TOL {
                return Ok((to_density(&p[..=nodes], h, params.v_th, rate)?, rate));
            }
            if explicit {
                return Err(Error::NotConverged(format!(
                    "density mass not converged at v_lb = {v_lb}: rate changes by {change:e} when the depth doubles"
                )));
            }
        }
        prev_rate = Some(rate);
        depth *= 2.0;
    }
    Err(Error::NotConverged(format!("density mass not converged after {MAX_DOUBLINGS} doublings of the lower bound")))
}

fn extend_backward(p: &mut Vec<f64>, nodes: usize, h: f64, reset_steps: usize, params: &LifParams, m: &DiffusionMoments) -> Result<()> {
    let s2 = m.sigma * m.sigma;
    let big_h = 2.0 * params.tau / s2;
    while p.len() <= nodes {
        let k = p.len() - 1;
        let v_mid = params.v_th - (k as f64 + 0.5) * h;
        let g = 2.0 * (v_mid - m.mu) / s2;
        let j = if k < reset_steps { 1.0 } else { 0.0 };
        let gh = g * h;
        let e = gh.exp();
        let phi = if gh.abs() < 1e-8 { h * (1.0 + 0.5 * gh) } else { gh.exp_m1() / g };
        let next = e * p[k] + big_h * j * phi;
        if !next.is_finite() {
            return Err(Error::Numerical(format!("threshold integration overflowed at v = {}", v_mid - 0.5 * h)));
        }
        p.push(next);
    }
    Ok(())
}

fn trapz_uniform(p: &[f64], h: f64) -> f64 {
    let n = p.len();
    if n < 2 {
        return 0.0;
    }
    h * (p.iter().sum::<f64>() - 0.5 * (p[0] + p[n - 1]))
}

fn to_density(p: &[f64], h: f64, v_th: f64, rate: f64) -> Result<MembraneDensity> {
    let n = p.len();
    let grid: Vec<f64> = (0..n).rev().map(|k| v_th - k as f64 * h).collect();
    let density: Vec<f64> = p.iter().rev().map(|x| x * rate).collect();
    let d = MembraneDensity::new(grid, density)?;
    debug_assert!((trapz(d.grid(), d.values()) - 1.0).abs() < 1e-9);
    Ok(d)
}
