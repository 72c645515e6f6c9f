//! Two-step initialisation: pick the weight scale that gives a target rate,
//! then the surrogate scale that keeps gradient variance constant across layers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::correction::Correction;
use crate::error::{ensure, Error, Result};
use crate::fp::{fp_before_reset, FpGrid};
use crate::math::roots::{brent, RootOptions};
use crate::sim::monte_carlo::PopulationConfig;
use crate::sim::network::LayerBlueprint;
use crate::sim::params::LifParams;
use crate::sim::population::SpikeTiming;
use crate::sim::weights::{WeightKind, WeightSpec};
use crate::surrogate::{surrogate_mass, SurrogateSpec};
use crate::theory::density::MembraneDensity;
use crate::theory::moments::DiffusionMoments;
use crate::theory::shot_noise::{shot_noise_rate, ShotNoiseSpec};
use crate::theory::siegert::siegert_rate;
use crate::theory::threshold::{threshold_integration_lif, DEFAULT_GRID_SIZE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMethod {
    #[default]
    Diffusion,
    ShotNoise,
    ThresholdIntegration,
}

/// Whether the rate map uses a formula or a corrected simulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    #[default]
    Theory,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloBudget {
    pub repeats: usize,
    pub duration: f64,
    pub warmup: f64,
    pub neurons: usize,
    pub seed: u64,
}

impl Default for MonteCarloBudget {
    fn default() -> Self {
        MonteCarloBudget { repeats: 5, duration: 1.0, warmup: 0.1, neurons: 1000, seed: 0 }
    }
}

/// Everything the rate map depends on besides the weight scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub params: LifParams,
    pub input_rate: f64,
    /// Neurons per layer, which is also the number of potential inputs.
    pub width: usize,
    /// Weight distribution; its scale is replaced by the solved `sigma_w`.
    pub weights: WeightSpec,
    #[serde(default)]
    pub method: RateMethod,
    /// Correction used by the simulated network.
    #[serde(default)]
    pub correction: Correction,
    #[serde(default)]
    pub mode: RateMode,
    #[serde(default)]
    pub monte_carlo: MonteCarloBudget,
}

impl Theta {
    /// Expected number of realised connections per neuron.
    pub fn fan_in(&self) -> f64 {
        self.width as f64 * self.weights.connection_prob
    }

    pub fn moments(&self, sigma_w: f64) -> Result<DiffusionMoments> {
        DiffusionMoments::from_population(&self.params, self.input_rate, self.width, &self.weights.with_scale(sigma_w)?)
    }

    fn population(&self, sigma_w: f64) -> Result<PopulationConfig> {
        Ok(PopulationConfig {
            params: self.params,
            n_neurons: self.monte_carlo.neurons,
            n_sources: self.width,
            input_rate: self.input_rate,
            weights: self.weights.with_scale(sigma_w)?,
            duration: self.monte_carlo.duration,
            warmup: self.monte_carlo.warmup,
            correction: self.correction,
            timing: SpikeTiming::IntervalStart,
        })
    }
}

/// Rate (Hz) at weight scale `sigma_w`, with a standard error that is zero for
/// the closed-form methods.
pub fn rate_operator_with_error(sigma_w: f64, theta: &Theta) -> Result<(f64, f64)> {
    ensure(sigma_w > 0.0 && sigma_w.is_finite(), || format!("sigma_w must be positive, got {sigma_w}"))?;
    if theta.mode == RateMode::MonteCarlo {
        let est = theta.population(sigma_w)?.estimate(theta.monte_carlo.repeats, theta.monte_carlo.seed)?;
        return Ok((est.mean, est.se));
    }
    let rate = match theta.method {
        RateMethod::Diffusion => siegert_rate(&theta.params, &theta.moments(sigma_w)?)?,
        RateMethod::ThresholdIntegration => threshold_integration_lif(&theta.params, &theta.moments(sigma_w)?, None, DEFAULT_GRID_SIZE)?.1,
        RateMethod::ShotNoise => {
            let spec = theta.weights.with_scale(sigma_w)?;
            let WeightKind::ExponentialPair { w_e, w_i } = spec.kind else {
                return Err(Error::Unsupported("the shot-noise rate needs exponential-pair weights".into()));
            };
            let r = 0.5 * theta.input_rate * theta.fan_in();
            shot_noise_rate(&theta.params, &ShotNoiseSpec { r_e: r, r_i: r, w_e, w_i })?
        }
    };
    Ok((rate, 0.0))
}

/// The forward rate map `sigma_w -> rate`.
pub fn rate_operator(sigma_w: f64, theta: &Theta) -> Result<f64> {
    rate_operator_with_error(sigma_w, theta).map(|r| r.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSolution {
    pub sigma_w: f64,
    pub rate: f64,
    pub rate_se: f64,
}

const BRACKET_LO: f64 = 1e-4;
const BRACKET_HI: f64 = 1.0;

/// Weight scale whose rate is `target` (Hz).
///
/// Closed-form methods stop at relative error 1e-5 of the target; simulated
/// rates stop within two standard errors.
pub fn solve_weight_sigma(target: f64, theta: &Theta) -> Result<WeightSolution> {
    ensure(target > 0.0 && target.is_finite(), || format!("target rate must be positive, got {target}"))?;
    let ceiling = 1.0 / theta.params.dt;
    if target >= ceiling {
        // At most one spike per step.
        return Err(Error::TargetOutOfRange { target, low: 0.0, high: ceiling });
    }
    let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
    let mut f_lo = rate_operator_with_error(lo, theta)?;
    let mut f_hi = rate_operator_with_error(hi, theta)?;
    // Rates grow with sigma below threshold; widen until the target is inside.
    let mut tries = 0;
    while (f_lo.0 - target) * (f_hi.0 - target) > 0.0 && tries < 16 && hi < 64.0 && lo > 1e-8 {
        if f_lo.0 > target {
            lo /= 10.0;
            f_lo = rate_operator_with_error(lo, theta)?;
        } else {
            hi *= 2.0;
            f_hi = rate_operator_with_error(hi, theta)?;
        }
        tries += 1;
    }
    if (f_lo.0 - target) * (f_hi.0 - target) > 0.0 {
        return Err(Error::TargetOutOfRange { target, low: f_lo.0.min(f_hi.0), high: f_lo.0.max(f_hi.0) });
    }

    if theta.mode == RateMode::Theory {
        let opts = RootOptions { x_tol: 1e-12, f_tol: 1e-5 * target, max_iter: 200 };
        let root = brent(|x| rate_operator(x, theta).map(|r| r - target), lo, hi, opts)?;
        return Ok(WeightSolution { sigma_w: root.x, rate: root.f + target, rate_se: 0.0 });
    }

    // Simulated rates: bisection, accepting the first point within 2 SE.
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (r, se) = rate_operator_with_error(mid, theta)?;
        if (r - target).abs() <= 2.0 * se.max(1e-12) {
            return Ok(WeightSolution { sigma_w: mid, rate: r, rate_se: se });
        }
        if (r - target) * (f_lo.0 - target) > 0.0 {
            lo = mid;
            f_lo = (r, se);
        } else {
            hi = mid;
        }
    }
    Err(Error::NotConverged(format!("simulated rate did not reach {target} Hz within two standard errors")))
}

/// `kappa = sqrt((1 - alpha²) / (n sigma_w² I))`.
pub fn kappa_from_integral(alpha: f64, fan_out: f64, sigma_w: f64, integral: f64) -> Result<f64> {
    if !(integral > 0.0) {
        return Err(Error::Numerical(format!(
            "surrogate integral is {integral}: the surrogate sees no membrane mass; widen it or check the rate"
        )));
    }
    Ok(((1.0 - alpha * alpha) / (fan_out * sigma_w * sigma_w * integral)).sqrt())
}

#[derive(Clone, Debug)]
pub struct KappaEstimate {
    pub kappa: f64,
    pub integral: f64,
    pub stationary: MembraneDensity,
    pub before_reset: MembraneDensity,
}

pub const FP_POINTS: usize = 2048;

/// Surrogate scale for layers initialised at `sigma_w`.
///
/// The stationary density comes from threshold integration, is evolved one
/// step without reset, and the surrogate mass of the result sets `kappa`.
pub fn kappa_for_gradient_flow(sigma_w: f64, theta: &Theta, surrogate: &SurrogateSpec) -> Result<KappaEstimate> {
    if theta.method == RateMethod::ShotNoise {
        return Err(Error::Unsupported("no before-reset density is available for shot-noise input".into()));
    }
    let m = theta.moments(sigma_w)?;
    let (stationary, _) = threshold_integration_lif(&theta.params, &m, None, DEFAULT_GRID_SIZE)?;
    let grid = FpGrid::around(&theta.params, &m, surrogate.reach(), FP_POINTS);
    let before_reset = fp_before_reset(&stationary, &m, &theta.params, &grid)?;
    let integral = surrogate_mass(&before_reset, surrogate, theta.params.v_th)?;
    let kappa = kappa_from_integral(theta.params.alpha(), theta.fan_in(), sigma_w, integral)?;
    Ok(KappaEstimate { kappa, integral, stationary, before_reset })
}

pub fn bound_coefficients(alpha: f64) -> (f64, f64) {
    let a = 1.0 / (1.0 - alpha * alpha);
    let b = 2.0 * alpha / ((1.0 - alpha).powi(2) * (1.0 + alpha));
    (a, b)
}

/// Chebyshev-type bound on the per-step firing probability of the next layer,
/// `n Var[w] / (2 V_th²) (A rho + B rho²)`.
///
/// Only a diagnostic: it assumes a membrane distribution symmetric around
/// zero and ignores the reset, so it is loose and says nothing about
/// biased populations.
pub fn forward_rate_bound(rho_prev: f64, fan_in: f64, var_w: f64, alpha: f64, v_th: f64) -> f64 {
    let (a, b) = bound_coefficients(alpha);
    fan_in * var_w / (2.0 * v_th * v_th) * (a * rho_prev + b * rho_prev * rho_prev)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub layer: usize,
    pub input_rate: f64,
    pub sigma_w: f64,
    pub predicted_rate: f64,
    pub integral: f64,
    pub kappa: f64,
    pub method: RateMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitPlan {
    pub theta: Theta,
    pub surrogate: SurrogateSpec,
    pub layers: Vec<LayerPlan>,
}

impl InitPlan {
    /// Layer descriptions ready for simulation, seeded from `seed`.
    pub fn blueprints(&self, seed: u64) -> Result<Vec<LayerBlueprint>> {
        self.layers
            .iter()
            .map(|l| {
                Ok(LayerBlueprint {
                    n_pre: self.theta.width,
                    n_post: self.theta.width,
                    spec: self.theta.weights.with_scale(l.sigma_w)?,
                    seed: crate::rng::derive_seed(seed, &[crate::rng::STREAM_WEIGHTS, l.layer as u64]),
                })
            })
            .collect()
    }

    /// Per-layer surrogates with the planned `kappa`.
    pub fn surrogates(&self) -> Vec<SurrogateSpec> {
        self.layers.iter().map(|l| self.surrogate.with_kappa(l.kappa)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["layer", "sigma_w", "rate", "kappa", "I"])?;
        for l in &self.layers {
            out.write_record([l.layer.to_string(), l.sigma_w.to_string(), l.predicted_rate.to_string(), l.kappa.to_string(), l.integral.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Plan `n_layers` layers. `targets` has one rate per layer or a single rate
/// for all; layer `l` is driven at layer `l - 1`'s target.
pub fn plan_network_init(n_layers: usize, targets: &[f64], theta: &Theta, surrogate: &SurrogateSpec) -> Result<InitPlan> {
    ensure(n_layers >= 1, || "need at least one layer".into())?;
    ensure(targets.len() == 1 || targets.len() == n_layers, || format!("need 1 or {n_layers} target rates, got {}", targets.len()))?;
    let target = |l: usize| if targets.len() == 1 { targets[0] } else { targets[l] };
    let mut layers: Vec<LayerPlan> = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let input_rate = if l == 0 { theta.input_rate } else { target(l - 1) };
        // Identical inputs and targets give identical answers; reuse them.
        if let Some(prev) = layers.last().filter(|p| p.input_rate == input_rate && l > 0 && target(l - 1) == target(l)) {
            layers.push(LayerPlan { layer: l, ..prev.clone() });
            continue;
        }
        let th = Theta { input_rate, ..theta.clone() };
        let sol = solve_weight_sigma(target(l), &th).map_err(|e| layer_error(l, e))?;
        let k = kappa_for_gradient_flow(sol.sigma_w, &th, surrogate).map_err(|e| layer_error(l, e))?;
        layers.push(LayerPlan {
            layer: l,
            input_rate,
            sigma_w: sol.sigma_w,
            predicted_rate: sol.rate,
            integral: k.integral,
            kappa: k.kappa,
            method: theta.method,
        });
    }
    Ok(InitPlan { theta: theta.clone(), surrogate: surrogate.clone(), layers })
}

fn layer_error(layer: usize, e: Error) -> Error {
    Error::Layer { layer, source: Box::new(e) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta(i_ext: f64, rate: f64, width: usize, weights: WeightSpec) -> Theta {
        Theta {
            params: LifParams::standard(i_ext, 1e-3),
            input_rate: rate,
            width,
            weights,
            method: RateMethod::Diffusion,
            correction: Correction::None,
            mode: RateMode::Theory,
            monte_carlo: MonteCarloBudget::default(),
        }
    }

    #[test]
    fn solves_sparse_two_point_weights() {
        let th = theta(0.6, 50.0, 2000, WeightSpec::two_point(0.01, 0.5));
        let sol = solve_weight_sigma(50.0, &th).unwrap();
        assert!((sol.sigma_w - 0.038708).abs() < 1e-3 * 0.038708, "{}", sol.sigma_w);
        let th = theta(0.6, 20.0, 2000, WeightSpec::two_point(0.01, 0.5));
        let sol = solve_weight_sigma(20.0, &th).unwrap();
        assert!((sol.sigma_w - 0.029948).abs() < 1e-3 * 0.029948, "{}", sol.sigma_w);
    }

    #[test]
    fn solves_dense_gaussian_weights() {
        let th = theta(0.9, 30.0, 2000, WeightSpec::gaussian(0.0, 0.01, 1.0));
        let sol = solve_weight_sigma(30.0, &th).unwrap();
        assert!((sol.sigma_w - 0.0096039).abs() < 1e-3 * 0.0096039, "{}", sol.sigma_w);
    }

    #[test]
    fn unreachable_target_reports_range() {
        let th = theta(0.6, 50.0, 2000, WeightSpec::two_point(0.01, 0.5));
        match solve_weight_sigma(5000.0, &th) {
            Err(Error::TargetOutOfRange { high, .. }) => assert!(high < 5000.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bound_coefficients_match_closed_forms() {
        let a = (-0.1f64).exp();
        let (ca, cb) = bound_coefficients(a);
        assert!((ca - 5.5167).abs() < 1e-3);
        assert!((cb - (1.0 / (1.0 - a).powi(2) - 1.0 / (1.0 - a * a))).abs() < 1e-9 * cb);
    }

    #[test]
    fn kappa_has_expected_scaling() {
        let k1 = kappa_from_integral(0.9, 1000.0, 0.01, 0.1).unwrap();
        let k2 = kappa_from_integral(0.9, 4000.0, 0.01, 0.1).unwrap();
        assert!((k1 / k2 - 2.0).abs() < 1e-12);
        assert!(kappa_from_integral(0.9, 1000.0, 0.01, 0.0).is_err());
    }

    #[test]
    fn plan_reuses_identical_layers() {
        let th = theta(0.9, 30.0, 2000, WeightSpec::gaussian(0.0, 0.01, 1.0));
        let plan = plan_network_init(3, &[30.0], &th, &SurrogateSpec::boxcar(0.01)).unwrap();
        assert_eq!(plan.layers.len(), 3);
        assert_eq!(plan.layers[1].sigma_w, plan.layers[2].sigma_w);
        assert!(plan.layers[0].kappa > 0.0);
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
