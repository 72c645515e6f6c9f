//! Weight distributions and realised connectivity.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Error, Result};
use crate::rng::rng_from;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightKind {
    /// Each connection is `+w` or `-w`.
    TwoPoint { w: f64 },
    Gaussian { mean: f64, std: f64 },
    /// Exponential amplitudes with mean `w_e` (excitatory) or `w_i` (inhibitory).
    ExponentialPair { w_e: f64, w_i: f64 },
    /// Fixed weights `weights[k]` occurring with proportion `proportions[k]`.
    DiscreteTypes { proportions: Vec<f64>, weights: Vec<f64> },
}

/// How the random signs/values of one neuron's incoming connections are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Balance {
    /// Every connection is drawn independently.
    Independent,
    /// Each neuron's row is matched exactly to the distribution's moments:
    /// equal numbers of excitatory and inhibitory connections, or a Gaussian
    /// row recentred and rescaled to the nominal mean and spread.
    #[default]
    PerNeuron,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(flatten)]
    pub kind: WeightKind,
    pub connection_prob: f64,
    #[serde(default)]
    pub balance: Balance,
}

impl WeightSpec {
    pub fn two_point(w: f64, connection_prob: f64) -> Self {
        WeightSpec { kind: WeightKind::TwoPoint { w }, connection_prob, balance: Balance::PerNeuron }
    }

    pub fn gaussian(mean: f64, std: f64, connection_prob: f64) -> Self {
        WeightSpec { kind: WeightKind::Gaussian { mean, std }, connection_prob, balance: Balance::PerNeuron }
    }

    pub fn exponential_pair(w_e: f64, w_i: f64, connection_prob: f64) -> Self {
        WeightSpec {
            kind: WeightKind::ExponentialPair { w_e, w_i },
            connection_prob,
            balance: Balance::PerNeuron,
        }
    }

    pub fn with_balance(self, balance: Balance) -> Self {
        WeightSpec { balance, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.connection_prob;
        ensure((0.0..=1.0).contains(&p), || format!("connection_prob must be in [0, 1], got {p}"))?;
        match &self.kind {
            WeightKind::TwoPoint { w } => ensure(*w > 0.0 && w.is_finite(), || format!("two-point weight must be positive, got {w}")),
            WeightKind::Gaussian { mean, std } => {
                ensure(mean.is_finite() && std.is_finite() && *std >= 0.0, || format!("gaussian needs finite mean and std >= 0, got ({mean}, {std})"))
            }
            WeightKind::ExponentialPair { w_e, w_i } => {
                ensure(*w_e > 0.0 && *w_i < 0.0 && w_e.is_finite() && w_i.is_finite(), || format!("exponential pair needs w_e > 0 > w_i, got ({w_e}, {w_i})"))
            }
            WeightKind::DiscreteTypes { proportions, weights } => {
                ensure(!proportions.is_empty() && proportions.len() == weights.len(), || {
                    "discrete types need matching, non-empty proportion and weight lists".into()
                })?;
                ensure(proportions.iter().all(|&d| d > 0.0), || "type proportions must be positive".into())?;
                let total: f64 = proportions.iter().sum();
                ensure((total - 1.0).abs() < 1e-9, || format!("type proportions must sum to 1, got {total}"))?;
                ensure(weights.iter().all(|w| w.is_finite()), || "type weights must be finite".into())
            }
        }
    }

    /// Mean and second moment of the weight on one realised connection.
    pub fn connection_moments(&self) -> (f64, f64) {
        match &self.kind {
            WeightKind::TwoPoint { w } => (0.0, w * w),
            WeightKind::Gaussian { mean, std } => (*mean, mean * mean + std * std),
            // Half of the connections are of each sign; E[X^2] = 2 m^2 for an exponential.
            WeightKind::ExponentialPair { w_e, w_i } => (0.5 * (w_e + w_i), w_e * w_e + w_i * w_i),
            WeightKind::DiscreteTypes { proportions, weights } => {
                let m1 = proportions.iter().zip(weights).map(|(d, w)| d * w).sum();
                let m2 = proportions.iter().zip(weights).map(|(d, w)| d * w * w).sum();
                (m1, m2)
            }
        }
    }

    /// Spread of the weight on a realised connection (`sigma_w` in the rate formulas).
    pub fn connection_std(&self) -> f64 {
        let (m1, m2) = self.connection_moments();
        (m2 - m1 * m1).max(0.0).sqrt()
    }

    /// The parameter that [`WeightSpec::with_scale`] sets.
    pub fn scale(&self) -> Result<f64> {
        match &self.kind {
            WeightKind::TwoPoint { w } => Ok(*w),
            WeightKind::Gaussian { std, .. } => Ok(*std),
            WeightKind::ExponentialPair { w_e, .. } => Ok(*w_e),
            WeightKind::DiscreteTypes { .. } => Err(Error::Unsupported("discrete-type weights have no single scale parameter".into())),
        }
    }

    /// Same distribution, rescaled so that the connection spread is `sigma`.
    /// Used by the initialisation root finder.
    pub fn with_scale(&self, sigma: f64) -> Result<Self> {
        let kind = match &self.kind {
            WeightKind::TwoPoint { .. } => WeightKind::TwoPoint { w: sigma },
            WeightKind::Gaussian { mean, .. } => WeightKind::Gaussian { mean: *mean, std: sigma },
            WeightKind::ExponentialPair { w_e, w_i } => {
                // Keep the ratio w_i / w_e; `sigma` is the excitatory amplitude.
                WeightKind::ExponentialPair { w_e: sigma, w_i: sigma * w_i / w_e }
            }
            WeightKind::DiscreteTypes { .. } => {
                return Err(Error::Unsupported("discrete-type weights have no single scale parameter".into()))
            }
        };
        Ok(WeightSpec { kind, ..self.clone() })
    }
}

/// Realised weights stored presynaptic-major, i.e. entry `pre * n_post + post`,
/// so that one presynaptic spike touches a contiguous row.
#[derive(Clone, Debug)]
pub enum WeightMatrix {
    /// Two-point weights: `w * signs[..]`, with `signs` in {-1, 0, 1}.
    Signed { w: f64, signs: Vec<i8> },
    Dense { values: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct LayerTopology {
    n_pre: usize,
    n_post: usize,
    spec: Option<WeightSpec>,
    seed: u64,
    matrix: WeightMatrix,
    n_connections: usize,
}

impl LayerTopology {
    /// Draw a layer from `spec` with the given seed.
    pub fn realise(n_pre: usize, n_post: usize, spec: &WeightSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        ensure(n_pre > 0 && n_post > 0, || format!("layer needs at least one neuron on each side, got {n_pre} x {n_post}"))?;
        let mut rng = rng_from(seed);
        let p = spec.connection_prob;
        let mut connected: Vec<usize> = Vec::with_capacity(n_pre);
        let mut n_connections = 0;

        let mut signs = Vec::new();
        let mut values = Vec::new();
        match spec.kind {
            WeightKind::TwoPoint { .. } => signs = vec![0i8; n_pre * n_post],
            _ => values = vec![0.0f64; n_pre * n_post],
        }
        let mut row: Vec<f64> = Vec::with_capacity(n_pre);

        for post in 0..n_post {
            connected.clear();
            for pre in 0..n_pre {
                if p >= 1.0 || rng.random::<f64>() < p {
                    connected.push(pre);
                }
            }
            n_connections += connected.len();
            let c = connected.len();
            match &spec.kind {
                WeightKind::TwoPoint { .. } => {
                    let row_signs = draw_signs(c, spec.balance, &mut rng);
                    for (&pre, s) in connected.iter().zip(row_signs) {
                        signs[pre * n_post + post] = s;
                    }
                }
                kind => {
                    draw_row(kind, c, spec.balance, &mut rng, &mut row)?;
                    for (&pre, &w) in connected.iter().zip(&row) {
                        values[pre * n_post + post] = w;
                    }
                }
            }
        }

        let matrix = match spec.kind {
            WeightKind::TwoPoint { w } => WeightMatrix::Signed { w, signs },
            _ => WeightMatrix::Dense { values },
        };
        Ok(LayerTopology { n_pre, n_post, spec: Some(spec.clone()), seed, matrix, n_connections })
    }

    /// Wrap an explicit matrix given row by row as `weights[post][pre]`.
    pub fn from_rows(weights: &[Vec<f64>]) -> Result<Self> {
        let n_post = weights.len();
        ensure(n_post > 0, || "empty weight matrix".into())?;
        let n_pre = weights[0].len();
        ensure(n_pre > 0 && weights.iter().all(|r| r.len() == n_pre), || "ragged weight matrix".into())?;
        let mut values = vec![0.0; n_pre * n_post];
        let mut n_connections = 0;
        for (post, row) in weights.iter().enumerate() {
            for (pre, &w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(invalid(format!("non-finite weight at ({post}, {pre})")));
                }
                values[pre * n_post + post] = w;
                n_connections += (w != 0.0) as usize;
            }
        }
        Ok(LayerTopology { n_pre, n_post, spec: None, seed: 0, matrix: WeightMatrix::Dense { values }, n_connections })
    }

    pub fn n_pre(&self) -> usize {
        self.n_pre
    }

    pub fn n_post(&self) -> usize {
        self.n_post
    }

    pub fn spec(&self) -> Option<&WeightSpec> {
        self.spec.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &WeightMatrix {
        &self.matrix
    }

    /// Number of nonzero entries.
    pub fn n_connections(&self) -> usize {
        self.n_connections
    }

    pub fn connection_fraction(&self) -> f64 {
        self.n_connections as f64 / (self.n_pre * self.n_post) as f64
    }

    pub fn weight(&self, post: usize, pre: usize) -> f64 {
        let i = pre * self.n_post + post;
        match &self.matrix {
            WeightMatrix::Signed { w, signs } => w * signs[i] as f64,
            WeightMatrix::Dense { values } => values[i],
        }
    }

    /// Sum of squared weights divided by `n_pre`: the realised `n Var[w]` that
    /// multiplies the gradient variance from one layer to the one below.
    pub fn mean_square_fan_out(&self) -> f64 {
        let ss: f64 = match &self.matrix {
            WeightMatrix::Signed { w, signs } => w * w * signs.iter().filter(|&&s| s != 0).count() as f64,
            WeightMatrix::Dense { values } => values.iter().map(|w| w * w).sum(),
        };
        ss / self.n_pre as f64
    }

    /// Dense copy laid out postsynaptic-major, `[post * n_pre + pre]`.
    pub fn post_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_pre * self.n_post];
        for pre in 0..self.n_pre {
            for post in 0..self.n_post {
                out[post * self.n_pre + pre] = self.weight(post, pre);
            }
        }
        out
    }
}

fn draw_signs(c: usize, balance: Balance, rng: &mut crate::rng::Rng) -> Vec<i8> {
    match balance {
        Balance::Independent => (0..c).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        Balance::PerNeuron => {
            let half = c / 2;
            let mut s: Vec<i8> = Vec::with_capacity(c);
            s.extend(std::iter::repeat_n(1i8, half));
            s.extend(std::iter::repeat_n(-1i8, half));
            if c % 2 == 1 {
                s.push(if rng.random::<bool>() { 1 } else { -1 });
            }
            s.shuffle(rng);
            s
        }
    }
}

fn draw_row(kind: &WeightKind, c: usize, balance: Balance, rng: &mut crate::rng::Rng, row: &mut Vec<f64>) -> Result<()> {
    row.clear();
    match kind {
        WeightKind::TwoPoint { .. } => unreachable!("two-point rows are stored as signs"),
        WeightKind::Gaussian { mean, std } => {
            row.extend((0..c).map(|_| mean + std * rng.sample::<f64, _>(StandardNormal)));
            if balance == Balance::PerNeuron && c >= 2 {
                let m = row.iter().sum::<f64>() / c as f64;
                let ss: f64 = row.iter().map(|w| (w - m) * (w - m)).sum();
                let scale = if ss > 0.0 { std * (c as f64 / ss).sqrt() } else { 0.0 };
                for w in row.iter_mut() {
                    *w = mean + (*w - m) * scale;
                }
            }
        }
        WeightKind::ExponentialPair { w_e, w_i } => {
            let unit = Exp::new(1.0).map_err(|e| invalid(e.to_string()))?;
            let signs = draw_signs(c, balance, rng);
            row.extend(signs.iter().map(|&s| {
                let a: f64 = unit.sample(rng);
                if s > 0 { a * w_e } else { a * w_i }
            }));
            if balance == Balance::PerNeuron {
                // Rescale each sign group to its exact mean amplitude.
                for (sign, target) in [(1i8, *w_e), (-1i8, *w_i)] {
                    let idx: Vec<usize> = (0..c).filter(|&k| signs[k] == sign).collect();
                    if idx.len() >= 2 {
                        let m = idx.iter().map(|&k| row[k]).sum::<f64>() / idx.len() as f64;
                        idx.iter().for_each(|&k| row[k] *= target / m);
                    }
                }
            }
        }
        WeightKind::DiscreteTypes { proportions, weights } => match balance {
            Balance::Independent => {
                row.extend((0..c).map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (d, w) in proportions.iter().zip(weights) {
                        acc += d;
                        if u < acc {
                            return *w;
                        }
                    }
                    *weights.last().expect("validated non-empty")
                }));
            }
            Balance::PerNeuron => {
                // Largest-remainder apportionment, then shuffle.
                let exact: Vec<f64> = proportions.iter().map(|d| d * c as f64).collect();
                let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
                let mut left = c - counts.iter().sum::<usize>();
                let mut order: Vec<usize> = (0..counts.len()).collect();
                order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
                for &k in order.iter().cycle() {
                    if left == 0 {
                        break;
                    }
                    counts[k] += 1;
                    left -= 1;
                }
                for (k, &n) in counts.iter().enumerate() {
                    row.extend(std::iter::repeat_n(weights[k], n));
                }
                row.shuffle(rng);
            }
        },
    }
    Ok(())
}
