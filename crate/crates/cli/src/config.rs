//! Experiment configuration: a TOML file of optional overrides, resolved
//! against per-experiment defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spikeinit::correction::Correction;
use spikeinit::init::RateMethod;
use spikeinit::sim::{LifParams, SpikeTiming, WeightSpec};
use spikeinit::surrogate::SurrogateSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Uncorrected rate against the step length.
    CollapseSweep,
    /// Random-walk corrected rate against the step length.
    RwCorrect,
    /// Wiener corrected rate against the step length.
    WienerCorrect,
    /// Permutation corrected rate against the step length.
    PermutationCorrect,
    /// Stationary, before-reset and simulated membrane densities.
    Distributions,
    /// Per-layer rates of an initialised deep network.
    MultilayerRates,
    /// Per-layer spike-gradient variance with and without the surrogate scale.
    GradientVariance,
    /// Stationary rate for given moments, or weights for target rates.
    RateSolver,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CollapseSweep => "collapse-sweep",
            Experiment::RwCorrect => "rw-correct",
            Experiment::WienerCorrect => "wiener-correct",
            Experiment::PermutationCorrect => "permutation-correct",
            Experiment::Distributions => "distributions",
            Experiment::MultilayerRates => "multilayer-rates",
            Experiment::GradientVariance => "gradient-variance",
            Experiment::RateSolver => "rate-solver",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Experiment as clap::ValueEnum>::from_str(s, false)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronOverrides {
    pub tau: Option<f64>,
    pub v_th: Option<f64>,
    pub v_r: Option<f64>,
    pub i_ext: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationOverrides {
    pub n_neurons: Option<usize>,
    pub n_sources: Option<usize>,
    pub input_rate: Option<f64>,
    pub duration: Option<f64>,
    pub warmup: Option<f64>,
    pub timing: Option<SpikeTiming>,
}

/// Everything a config file may set. Missing values take the experiment's
/// defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub correction: Option<Correction>,
    /// Step lengths (ms). The collapse experiments sweep them; the others use
    /// the first entry.
    pub dt_ms: Option<Vec<f64>>,
    /// Target rates (Hz), one chain each for multilayer-rates.
    pub targets: Option<Vec<f64>>,
    pub layers: Option<usize>,
    pub method: Option<RateMethod>,
    /// Diffusion moments for rate-solver; derived from the population if absent.
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub neuron: Option<NeuronOverrides>,
    pub population: Option<PopulationOverrides>,
    pub weights: Option<WeightSpec>,
    pub surrogate: Option<SurrogateSpec>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

/// Fully resolved settings. Serialising this as an [`ExperimentConfig`] gives
/// the run manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub experiment: Experiment,
    pub seed: u64,
    pub repeats: usize,
    pub correction: Correction,
    pub dt_ms: Vec<f64>,
    pub targets: Vec<f64>,
    pub layers: usize,
    pub method: RateMethod,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub params: LifParams,
    pub n_neurons: usize,
    pub n_sources: usize,
    pub input_rate: f64,
    pub duration: f64,
    pub warmup: f64,
    pub timing: SpikeTiming,
    pub weights: WeightSpec,
    pub surrogate: SurrogateSpec,
}

#[derive(Clone)]
struct Defaults {
    repeats: usize,
    correction: Correction,
    dt_ms: Vec<f64>,
    targets: Vec<f64>,
    layers: usize,
    i_ext: f64,
    n_neurons: usize,
    n_sources: usize,
    input_rate: f64,
    duration: f64,
    weights: WeightSpec,
}

fn defaults(e: Experiment) -> Defaults {
    let sweep = vec![1.0, 2.0, 5.0, 10.0, 20.0];
    // Sparse ±0.01 inputs driving a population at mean 0.8.
    let sparse = Defaults {
        repeats: 10,
        correction: Correction::None,
        dt_ms: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
        targets: vec![],
        layers: 1,
        i_ext: 0.8,
        n_neurons: 1000,
        n_sources: 2000,
        input_rate: 50.0,
        duration: 1.0,
        weights: WeightSpec::two_point(0.01, 0.5),
    };
    let dense = Defaults {
        repeats: 5,
        weights: WeightSpec::gaussian(0.0, 0.01, 1.0),
        dt_ms: sweep.clone(),
        ..sparse.clone()
    };
    match e {
        Experiment::CollapseSweep | Experiment::RateSolver => sparse,
        Experiment::RwCorrect => Defaults { correction: Correction::RandomWalk, dt_ms: sweep, ..sparse },
        Experiment::WienerCorrect => Defaults { correction: Correction::Wiener, ..dense },
        Experiment::PermutationCorrect => Defaults { correction: Correction::Permutation, repeats: 3, ..dense },
        Experiment::Distributions => Defaults {
            repeats: 1,
            correction: Correction::Wiener,
            dt_ms: vec![1.0],
            targets: vec![30.0],
            i_ext: 0.9,
            n_neurons: 2000,
            input_rate: 30.0,
            ..dense
        },
        Experiment::MultilayerRates => Defaults {
            repeats: 5,
            correction: Correction::RandomWalk,
            dt_ms: vec![1.0],
            targets: vec![50.0, 20.0],
            layers: 20,
            i_ext: 0.6,
            n_neurons: 2000,
            ..sparse
        },
        Experiment::GradientVariance => Defaults {
            repeats: 1,
            correction: Correction::Wiener,
            dt_ms: vec![1.0],
            targets: vec![30.0],
            layers: 20,
            i_ext: 0.9,
            n_neurons: 2000,
            input_rate: 30.0,
            duration: 0.4,
            ..dense
        },
    }
}

impl Resolved {
    pub fn from_config(c: &ExperimentConfig) -> Result<Self, ConfigError> {
        let experiment = c.experiment.ok_or_else(|| ConfigError("experiment: missing (pass --experiment or set it in the config)".into()))?;
        let d = defaults(experiment);
        let n = c.neuron.clone().unwrap_or_default();
        let pop = c.population.clone().unwrap_or_default();
        let dt_ms = c.dt_ms.clone().unwrap_or(d.dt_ms);
        check(dt_ms.first().is_some_and(|&d| d > 0.0), "dt_ms: need positive step lengths")?;
        let base = LifParams::standard(d.i_ext, dt_ms[0] * 1e-3);
        let params = LifParams {
            tau: n.tau.unwrap_or(base.tau),
            v_th: n.v_th.unwrap_or(base.v_th),
            v_r: n.v_r.unwrap_or(base.v_r),
            i_ext: n.i_ext.unwrap_or(base.i_ext),
            dt: base.dt,
        };
        let r = Resolved {
            experiment,
            seed: c.seed.unwrap_or(1),
            repeats: c.repeats.unwrap_or(d.repeats),
            correction: c.correction.unwrap_or(d.correction),
            dt_ms,
            targets: c.targets.clone().unwrap_or(d.targets),
            layers: c.layers.unwrap_or(d.layers),
            method: c.method.unwrap_or_default(),
            mu: c.mu,
            sigma: c.sigma,
            params,
            n_neurons: pop.n_neurons.unwrap_or(d.n_neurons),
            n_sources: pop.n_sources.unwrap_or(d.n_sources),
            input_rate: pop.input_rate.unwrap_or(d.input_rate),
            duration: pop.duration.unwrap_or(d.duration),
            warmup: pop.warmup.unwrap_or(0.2),
            timing: pop.timing.unwrap_or_default(),
            weights: c.weights.clone().unwrap_or(d.weights),
            surrogate: c.surrogate.clone().unwrap_or(SurrogateSpec::boxcar(0.01)),
        };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let field = |name: &str, e: spikeinit::Error| ConfigError(format!("{name}: {e}"));
        check(self.repeats >= 1, "repeats: must be at least 1")?;
        check(!self.dt_ms.is_empty() && self.dt_ms.iter().all(|&d| d > 0.0 && d.is_finite()), "dt_ms: need positive step lengths")?;
        check(self.targets.iter().all(|&t| t > 0.0 && t.is_finite()), "targets: rates must be positive")?;
        check(self.layers >= 1, "layers: must be at least 1")?;
        check(self.n_neurons >= 1 && self.n_sources >= 1, "population: need at least one neuron and one source")?;
        check(self.input_rate >= 0.0 && self.input_rate.is_finite(), "population.input_rate: must be >= 0")?;
        check(self.duration > 0.0 && self.warmup >= 0.0, "population: duration must be positive and warmup >= 0")?;
        check(self.sigma.is_none_or(|s| s > 0.0), "sigma: must be positive")?;
        check(self.mu.is_none_or(f64::is_finite), "mu: must be finite")?;
        self.params.validate().map_err(|e| field("neuron", e))?;
        self.weights.validate().map_err(|e| field("weights", e))?;
        self.surrogate.validate().map_err(|e| field("surrogate", e))?;
        let needs_targets = matches!(self.experiment, Experiment::Distributions | Experiment::MultilayerRates | Experiment::GradientVariance);
        check(!needs_targets || !self.targets.is_empty(), "targets: this experiment needs at least one target rate")?;
        Ok(())
    }

    pub fn params_at(&self, dt_ms: f64) -> LifParams {
        self.params.with_dt(dt_ms * 1e-3)
    }

    /// The manifest: every resolved value, in config form.
    pub fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: Some(self.experiment),
            seed: Some(self.seed),
            repeats: Some(self.repeats),
            correction: Some(self.correction),
            dt_ms: Some(self.dt_ms.clone()),
            targets: Some(self.targets.clone()),
            layers: Some(self.layers),
            method: Some(self.method),
            mu: self.mu,
            sigma: self.sigma,
            neuron: Some(NeuronOverrides {
                tau: Some(self.params.tau),
                v_th: Some(self.params.v_th),
                v_r: Some(self.params.v_r),
                i_ext: Some(self.params.i_ext),
            }),
            population: Some(PopulationOverrides {
                n_neurons: Some(self.n_neurons),
                n_sources: Some(self.n_sources),
                input_rate: Some(self.input_rate),
                duration: Some(self.duration),
                warmup: Some(self.warmup),
                timing: Some(self.timing),
            }),
            weights: Some(self.weights.clone()),
            surrogate: Some(self.surrogate.clone()),
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(msg.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ExperimentConfig {
        toml::from_str(s).unwrap()
    }

    #[test]
    fn empty_overrides_give_the_defaults() {
        let r = Resolved::from_config(&parse("experiment = \"collapse-sweep\"")).unwrap();
        assert_eq!(r.n_sources, 2000);
        assert_eq!(r.weights, WeightSpec::two_point(0.01, 0.5));
        assert_eq!(r.params.i_ext, 0.8);
        assert_eq!(r.repeats, 10);
    }

    #[test]
    fn manifest_round_trips() {
        let r = Resolved::from_config(&parse(
            "experiment = \"multilayer-rates\"\nseed = 4\ntargets = [30.0]\n[population]\nduration = 0.5\n[weights]\nkind = \"gaussian\"\nmean = 0.0\nstd = 0.02\nconnection_prob = 1.0\n",
        ))
        .unwrap();
        let text = toml::to_string(&r.to_config()).unwrap();
        let back = Resolved::from_config(&toml::from_str(&text).unwrap()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn field_errors_name_the_field() {
        let err = Resolved::from_config(&parse("experiment = \"rw-correct\"\nrepeats = 0")).unwrap_err();
        assert!(err.0.starts_with("repeats"));
        let err = Resolved::from_config(&parse("experiment = \"rw-correct\"\n[neuron]\ntau = -1.0")).unwrap_err();
        assert!(err.0.starts_with("neuron"), "{}", err.0);
        assert!(toml::from_str::<ExperimentConfig>("experiment = \"rw-correct\"\nbogus = 1").is_err());
    }
}
