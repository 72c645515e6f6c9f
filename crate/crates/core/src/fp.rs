//! Membrane density evolved over one step without the reset, giving the
//! distribution the surrogate gradient is evaluated on.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::sim::params::LifParams;
use crate::theory::density::MembraneDensity;
use crate::theory::moments::DiffusionMoments;

pub const MAX_SUBSTEPS: usize = 1 << 16;

/// Cell-centred voltage grid for the transient solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpGrid {
    pub v_min: f64,
    pub v_max: f64,
    pub n_points: usize,
    /// Requested substep; shortened automatically if it breaks stability.
    pub dt_inner: f64,
}

impl FpGrid {
    /// From `V_r - 10σ` to `V_th + max(10σ, 4 reach)`.
    pub fn around(params: &LifParams, m: &DiffusionMoments, surrogate_reach: f64, n_points: usize) -> Self {
        FpGrid {
            v_min: params.v_r - 10.0 * m.sigma,
            v_max: params.v_th + (10.0 * m.sigma).max(4.0 * surrogate_reach),
            n_points,
            dt_inner: params.dt,
        }
    }

    pub fn validate(&self, params: &LifParams) -> Result<()> {
        ensure(self.n_points >= 1024, || format!("FP grid needs >= 1024 points, got {}", self.n_points))?;
        ensure(self.v_max > params.v_th && self.v_min < self.v_max, || {
            format!("FP grid [{}, {}] must extend above threshold {}", self.v_min, self.v_max, params.v_th)
        })?;
        ensure(self.dt_inner > 0.0, || "dt_inner must be positive".into())
    }

    pub fn spacing(&self) -> f64 {
        (self.v_max - self.v_min) / self.n_points as f64
    }

    pub fn centres(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points).map(|i| self.v_min + (i as f64 + 0.5) * h).collect()
    }
}

/// Statistics of one transient solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpReport {
    pub substeps: usize,
    /// Change of mass when the initial density was moved onto the grid.
    pub interpolation_mass_delta: f64,
    /// Mass removed by clipping negative values.
    pub clipped_mass: f64,
}

/// Evolve `initial` for one step `params.dt` under
/// `τ ∂P/∂t = -∂v((μ - v) P) + (σ²/2) ∂²P/∂v²`, no threshold, zero flux at
/// the grid edges.
pub fn fp_before_reset(initial: &MembraneDensity, m: &DiffusionMoments, params: &LifParams, grid: &FpGrid) -> Result<MembraneDensity> {
    evolve_density(initial, m, params, grid, params.dt).map(|(d, _)| d)
}

/// Same solve for an arbitrary duration, with diagnostics.
pub fn evolve_density(
    initial: &MembraneDensity,
    m: &DiffusionMoments,
    params: &LifParams,
    grid: &FpGrid,
    duration: f64,
) -> Result<(MembraneDensity, FpReport)> {
    params.validate()?;
    grid.validate(params)?;
    ensure(duration >= 0.0, || format!("duration must be >= 0, got {duration}"))?;
    let h = grid.spacing();
    let centres = grid.centres();
    let n = centres.len();

    let mut p: Vec<f64> = centres.iter().map(|&v| initial.at(v)).collect();
    let mass0: f64 = p.iter().sum::<f64>() * h;
    ensure(mass0 > 0.0, || "initial density has no mass on the FP grid".into())?;
    let interpolation_mass_delta = mass0 - initial.mass();
    p.iter_mut().for_each(|x| *x /= mass0);

    // Face velocities a = (μ - v)/τ at the n - 1 interior faces; the two
    // boundary faces carry no flux.
    let d = m.sigma * m.sigma / (2.0 * params.tau);
    let faces: Vec<f64> = (1..n).map(|i| (m.mu - (grid.v_min + i as f64 * h)) / params.tau).collect();
    let mut out_rate: f64 = 0.0;
    for i in 0..n {
        let right = if i + 1 < n { faces[i].max(0.0) + d / h } else { 0.0 };
        let left = if i > 0 { (-faces[i - 1]).max(0.0) + d / h } else { 0.0 };
        out_rate = out_rate.max((right + left) / h);
    }
    let dt_stable = 0.9 / out_rate;
    let mut substeps = 0;
    if duration > 0.0 {
        let by_request = (duration / grid.dt_inner).ceil();
        let by_stability = (duration / dt_stable).ceil();
        let needed = by_request.max(by_stability);
        if needed > MAX_SUBSTEPS as f64 {
            return Err(Error::NotConverged(format!(
                "FP solve needs {needed} substeps (limit {MAX_SUBSTEPS}); use a coarser grid"
            )));
        }
        substeps = needed as usize;
        let dt = duration / substeps as f64;
        let mut flux = vec![0.0; n + 1];
        for _ in 0..substeps {
            for f in 1..n {
                let a = faces[f - 1];
                let upwind = if a > 0.0 { a * p[f - 1] } else { a * p[f] };
                flux[f] = upwind - d * (p[f] - p[f - 1]) / h;
            }
            for i in 0..n {
                p[i] -= dt / h * (flux[i + 1] - flux[i]);
            }
        }
    }
    let mut clipped = 0.0;
    for x in p.iter_mut() {
        if *x < 0.0 {
            clipped -= *x * h;
            *x = 0.0;
        }
    }
    if clipped > 0.0 {
        debug!("FP solve clipped {clipped:e} of negative mass");
    }
    let density = MembraneDensity::new(centres, p)?;
    Ok((density, FpReport { substeps, interpolation_mass_delta, clipped_mass: clipped }))
}
