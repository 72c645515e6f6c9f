//! Crossing probability in the Brownian-bridge limit of many small inputs.

use crate::sim::params::LifParams;

/// Barrier and endpoint after rescaling the input walk to a Wiener process on
/// `[0, dt]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WienerQuery {
    pub m: f64,
    pub w_end: f64,
    pub dt: f64,
}

/// Outcome of a crossing probability query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WienerProbability {
    pub p: f64,
    /// Set when `w_end < m <= 0`: the barrier sat at or below the start, which
    /// the closed form does not cover.
    pub barrier_below_start: bool,
}

/// `exp(-2 m (m - w_end) / dt)` for `m > max(0, w_end)`, otherwise 1.
pub fn wiener_spike_probability(q: &WienerQuery) -> WienerProbability {
    if q.m <= q.w_end {
        return WienerProbability { p: 1.0, barrier_below_start: false };
    }
    if q.m <= 0.0 {
        return WienerProbability { p: 1.0, barrier_below_start: true };
    }
    let p = (-2.0 * q.m * (q.m - q.w_end) / q.dt).exp();
    WienerProbability { p, barrier_below_start: false }
}

/// Build the rescaled query for one neuron and step; `None` when no input
/// spike arrived (no correction applies).
pub fn wiener_query_from_step(
    params: &LifParams,
    v_prev: f64,
    mu_w: f64,
    sigma_w: f64,
    n_spikes: u32,
    net_input: f64,
) -> Option<WienerQuery> {
    wiener_query_general(params.deterministic(v_prev), params.v_th, params.dt, mu_w, sigma_w, n_spikes, net_input)
}

/// Variant with a caller-supplied deterministic part `g(v)` and threshold `V_th(t)`.
pub fn wiener_query_general(
    det: f64,
    v_th_t: f64,
    dt: f64,
    mu_w: f64,
    sigma_w: f64,
    n_spikes: u32,
    net_input: f64,
) -> Option<WienerQuery> {
    if n_spikes == 0 || sigma_w <= 0.0 {
        return None;
    }
    let scale = sigma_w * (n_spikes as f64 / dt).sqrt();
    Some(WienerQuery { m: (v_th_t - det - mu_w) / scale, w_end: (net_input - mu_w) / scale, dt })
}
