use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Constants of a leaky integrate-and-fire neuron with unit resistance and no
/// refractory period. Times are in seconds, voltages in threshold units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifParams {
    pub tau: f64,
    pub v_th: f64,
    pub v_r: f64,
    pub i_ext: f64,
    pub dt: f64,
}

impl LifParams {
    pub fn new(tau: f64, v_th: f64, v_r: f64, i_ext: f64, dt: f64) -> Result<Self> {
        let p = LifParams { tau, v_th, v_r, i_ext, dt };
        p.validate()?;
        Ok(p)
    }

    /// τ = 10 ms, V_th = 1, V_r = 0 with the given bias and step.
    pub fn standard(i_ext: f64, dt: f64) -> Self {
        LifParams { tau: 0.01, v_th: 1.0, v_r: 0.0, i_ext, dt }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.tau.is_finite() && self.tau > 0.0, || format!("tau must be positive, got {}", self.tau))?;
        ensure(self.dt.is_finite() && self.dt > 0.0, || format!("dt must be positive, got {}", self.dt))?;
        ensure(self.v_th.is_finite() && self.v_r.is_finite() && self.v_th > self.v_r, || {
            format!("need v_th > v_r, got v_th = {}, v_r = {}", self.v_th, self.v_r)
        })?;
        ensure(self.i_ext.is_finite(), || "i_ext must be finite".into())
    }

    pub fn with_dt(self, dt: f64) -> Self {
        LifParams { dt, ..self }
    }

    pub fn with_i_ext(self, i_ext: f64) -> Self {
        LifParams { i_ext, ..self }
    }

    /// Per-step decay `exp(-dt/tau)`.
    pub fn alpha(&self) -> f64 {
        (-self.dt / self.tau).exp()
    }

    /// Interval-averaged decay `(tau/dt)(1 - alpha)`.
    pub fn alpha_bar(&self) -> f64 {
        -(self.tau / self.dt) * (-self.dt / self.tau).exp_m1()
    }

    /// Membrane after one step with no input: `alpha v + (1 - alpha) I`.
    pub fn deterministic(&self, v: f64) -> f64 {
        let a = self.alpha();
        a * v + (1.0 - a) * self.i_ext
    }
}
