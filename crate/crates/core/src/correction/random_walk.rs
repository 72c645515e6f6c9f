//! Exact threshold-crossing probability for symmetric ±w inputs.
//!
//! Within a step the `N` excitatory and `M` inhibitory arrivals are ordered
//! uniformly at random, so the running input is a symmetric walk bridge from 0
//! to `k = N - M` in `n = N + M` steps. The reflection principle gives
//! `P(max >= y | X_n = k) = P(X_n = 2y - k) / P(X_n = k)` for `k <= y <= N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::special::ln_binomial;
use crate::sim::params::LifParams;

/// `P(X_n = k)` for a simple symmetric walk started at 0.
pub fn random_walk_endpoint_pmf(n: u64, k: i64) -> f64 {
    if k.unsigned_abs() > n || (n as i64 + k) % 2 != 0 {
        return 0.0;
    }
    let up = (n as i64 + k) / 2;
    (ln_binomial(n, up) - n as f64 * std::f64::consts::LN_2).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RwQuery {
    pub n_exc: u64,
    pub n_inh: u64,
    /// Number of net up-steps needed to reach threshold.
    pub steps_needed: i64,
}

impl RwQuery {
    pub fn n(&self) -> u64 {
        self.n_exc + self.n_inh
    }

    pub fn k(&self) -> i64 {
        self.n_exc as i64 - self.n_inh as i64
    }
}

/// Probability that the bridge reaches `y` at some point.
///
/// `y <= 0` is certain because the walk starts at 0.
pub fn rw_spike_probability(q: &RwQuery) -> f64 {
    rw_probability_nk(q.n(), q.k(), q.steps_needed).expect("an (N, M) query is always a consistent endpoint")
}

/// Same probability given `n` and the endpoint `k` directly. Fails when `k`
/// cannot be the endpoint of an `n`-step walk.
pub fn rw_probability_nk(n: u64, k: i64, y: i64) -> Result<f64> {
    if k.unsigned_abs() > n || (n as i64 + k) % 2 != 0 {
        return Err(Error::InvalidParameter(format!("endpoint {k} is unreachable in {n} steps")));
    }
    if y <= 0 || y <= k {
        return Ok(1.0);
    }
    let n_up = (n as i64 + k) / 2;
    if y > n_up {
        return Ok(0.0);
    }
    // C(n, y + M) / C(n, N) with M = n - N.
    let a = y + (n as i64 - n_up);
    let b = n_up;
    let terms = a - b;
    let p = if terms <= 64 {
        (b + 1..=a).fold(1.0, |acc, j| acc * (n as i64 - j + 1) as f64 / j as f64)
    } else {
        (ln_binomial(n, a) - ln_binomial(n, b)).exp()
    };
    Ok(p.clamp(0.0, 1.0))
}

/// `ceil((v_th_t - det) / w)` where `det` is the deterministic part of the
/// membrane at the end of the step, possibly from a nonlinear `g(v)`.
pub fn rw_barrier(det: f64, w: f64, v_th_t: f64) -> i64 {
    debug_assert!(w > 0.0);
    let y = ((v_th_t - det) / w).ceil();
    y.clamp(i64::MIN as f64 / 2.0, i64::MAX as f64 / 2.0) as i64
}

/// Which decay enters the deterministic part of the barrier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierDecay {
    /// `alpha v + (1 - alpha) I`.
    #[default]
    Alpha,
    /// `alpha_bar v + (1 - alpha_bar) I`, the interval-averaged decay. Kept as a
    /// negative control; it overestimates the crossing probability.
    AlphaBar,
}

pub fn lif_barrier(params: &LifParams, v_prev: f64, w: f64, decay: BarrierDecay) -> i64 {
    let a = match decay {
        BarrierDecay::Alpha => params.alpha(),
        BarrierDecay::AlphaBar => params.alpha_bar(),
    };
    rw_barrier(a * v_prev + (1.0 - a) * params.i_ext, w, params.v_th)
}
