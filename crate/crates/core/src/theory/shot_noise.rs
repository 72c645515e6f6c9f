//! Stationary LIF rate under Poisson input with exponentially distributed
//! amplitudes.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::math::quad::{integrate, QuadOptions};
use crate::sim::params::LifParams;

/// Total excitatory/inhibitory input rates and mean amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseSpec {
    pub r_e: f64,
    pub r_i: f64,
    pub w_e: f64,
    pub w_i: f64,
}

impl ShotNoiseSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.r_e >= 0.0 && self.r_i >= 0.0 && self.r_e.is_finite() && self.r_i.is_finite(), || {
            format!("shot-noise rates must be >= 0, got ({}, {})", self.r_e, self.r_i)
        })?;
        ensure(self.w_e > 0.0 && self.w_i < 0.0, || {
            format!("shot-noise amplitudes need w_e > 0 > w_i, got ({}, {})", self.w_e, self.w_i)
        })
    }
}

/// Rate from
/// `1/r = τ ∫_0^{1/w_e} Z(x)/x (e^{x V_th}/(1 - x w_e) - e^{x V_r}) dx`,
/// `Z(x) = (1 - x w_e)^{τ r_e} (1 - x w_i)^{τ r_i}`.
///
/// A constant bias shifts both voltages down by `I`. Only subthreshold bias
/// (`I < V_th`) is supported. The upper endpoint behaves like
/// `(1 - x w_e)^{τ r_e - 1}`, integrable but singular for `τ r_e < 1`, so that
/// half of the range is integrated in `t` with `1 - x w_e = t^q`.
pub fn shot_noise_rate(params: &LifParams, spec: &ShotNoiseSpec) -> Result<f64> {
    params.validate()?;
    spec.validate()?;
    let v_th = params.v_th - params.i_ext;
    let v_r = params.v_r - params.i_ext;
    if v_th <= 0.0 {
        return Err(Error::Unsupported(format!(
            "bias {} reaches threshold; the shot-noise formula covers subthreshold bias only",
            params.i_ext
        )));
    }
    let (ke, ki) = (params.tau * spec.r_e, params.tau * spec.r_i);
    if ke == 0.0 {
        return Ok(0.0);
    }
    let (we, wi) = (spec.w_e, spec.w_i);

    let f = |x: f64| -> f64 {
        let c = x * we;
        let log_z = ke * (-c).ln_1p() + ki * (-(x * wi)).ln_1p();
        let (a, b) = (x * v_th, x * v_r);
        if a.abs() < 1.0 && b.abs() < 1.0 {
            if x == 0.0 {
                // Limit x -> 0.
                return v_th - v_r + we;
            }
            let bracket = (a.exp_m1() - b.exp_m1()) / x + we * b.exp();
            log_z.exp() * bracket / (1.0 - c)
        } else {
            ((log_z + a).exp() - (log_z + b).exp() * (1.0 - c)) / (x * (1.0 - c))
        }
    };

    let x_mid = 0.5 / we;
    let opts = QuadOptions { rel_tol: 1e-10, abs_tol: 0.0, max_intervals: 4000 };
    let lower = integrate(f, 0.0, x_mid, opts).map_err(|e| endpoint_error("x -> 0", e))?;

    let q = (2.0 / ke).max(1.0);
    let t_max = 0.5f64.powf(1.0 / q);
    // x = (1 - t^q)/w_e, dx = -(q t^{q-1}/w_e) dt
    let g = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let s = t.powf(q);
        let x = (1.0 - s) / we;
        let jac = q * t.powf(q - 1.0) / we;
        // Z contains s^{ke}; combine with 1/s from the bracket in log space.
        let log_rest = ki * (-(x * wi)).ln_1p();
        let term1 = (ke * s.ln() + log_rest + x * v_th - s.ln()).exp();
        let term2 = (ke * s.ln() + log_rest + x * v_r).exp();
        (term1 - term2) / x * jac
    };
    let upper = integrate(g, 0.0, t_max, opts).map_err(|e| endpoint_error("x -> 1/w_e", e))?;
    let total = lower.value + upper.value;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numerical(format!("shot-noise integral evaluated to {total}")));
    }
    Ok(1.0 / (params.tau * total))
}

fn endpoint_error(which: &str, e: Error) -> Error {
    Error::Numerical(format!("shot-noise integral failed near {which}: {e}"))
}
