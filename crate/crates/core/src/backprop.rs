//! Surrogate-gradient backward pass through an unrolled LIF network.
//!
//! Time indexing follows the simulator: layer `l` at step `t` integrates the
//! spikes its inputs emitted at step `t`. The membrane of layer `l` at step `k`
//! therefore depends on input spikes at `t <= k` through `alpha^(k-t) W`, and
//!
//! ```text
//! Δs_{l-1}[t] = Σ_{k>=t} alpha^(k-t) W_lᵀ Δv_l[k]  =  W_lᵀ Δv_l[t] + alpha Δs_{l-1}[t+1]
//! Δv_l[t]     = kappa_l H'(v_l[t]) Δs_l[t]
//! ```
//!
//! with `Δv = 1` on the top layer (the loss is the sum of its membranes over
//! time). The reset is not differentiated through.

use crate::correction::Correction;
use crate::error::{ensure, Error, Result};
use crate::math::stats::Welford;
use crate::sim::network::{run_network, LayerSource, MembraneTrace, NetworkRun, RunOptions};
use crate::sim::params::LifParams;
use crate::sim::raster::SpikeRaster;
use crate::sim::weights::LayerTopology;
use crate::surrogate::SurrogateSpec;

/// Forward run that also keeps every layer's pre-reset membrane.
pub fn forward_unrolled<L: LayerSource + ?Sized>(
    layers: &L,
    params: &LifParams,
    input: &SpikeRaster,
    correction: Correction,
    opts: &RunOptions,
) -> Result<NetworkRun> {
    run_network(layers, params, input, correction, &RunOptions { record_membrane: true, ..*opts })
}

/// Spike gradients of one population.
#[derive(Clone, Debug)]
pub struct SpikeGradient {
    pub n_neurons: usize,
    pub n_steps: usize,
    /// Pooled over neurons and steps.
    pub mean: f64,
    pub variance: f64,
    /// `Δs`, step-major, when tensors were requested.
    pub ds: Option<Vec<f64>>,
}

impl SpikeGradient {
    pub fn ds_at(&self, neuron: usize, step: usize) -> Option<f64> {
        self.ds.as_ref().map(|d| d[step * self.n_neurons + neuron])
    }
}

#[derive(Clone, Debug)]
pub struct GradientTrace {
    /// Entry 0 is the input population, entry `l + 1` the output of layer `l`.
    /// The top layer has no spike gradient, so there are as many entries as layers.
    pub spikes: Vec<SpikeGradient>,
    /// Mean of `(kappa H'(v))²` over neurons and steps, per layer. This is the
    /// empirical surrogate activity; `NaN` for the top layer.
    pub surrogate_activity: Vec<f64>,
    /// `Δv` per layer (step-major) when tensors were requested.
    pub dv: Option<Vec<Vec<f64>>>,
}

pub fn gradient_variance_per_layer(gt: &GradientTrace) -> Vec<f64> {
    gt.spikes.iter().map(|s| s.variance).collect()
}

/// Backward pass over a forward run made with [`forward_unrolled`].
///
/// `surrogates` holds one entry per layer, or a single entry for all layers.
pub fn backward_unrolled<L: LayerSource + ?Sized>(
    run: &NetworkRun,
    layers: &L,
    params: &LifParams,
    surrogates: &[SurrogateSpec],
    keep_tensors: bool,
) -> Result<GradientTrace> {
    let membranes: Vec<&MembraneTrace> = run
        .layers
        .iter()
        .enumerate()
        .map(|(l, r)| r.membrane.as_ref().ok_or_else(|| Error::InvalidParameter(format!("layer {l} has no membrane record; use forward_unrolled"))))
        .collect::<Result<_>>()?;
    backward_from_membranes(layers, &membranes, params, surrogates, keep_tensors)
}

pub(crate) fn backward_from_membranes<L: LayerSource + ?Sized>(
    layers: &L,
    membranes: &[&MembraneTrace],
    params: &LifParams,
    surrogates: &[SurrogateSpec],
    keep_tensors: bool,
) -> Result<GradientTrace> {
    let n_layers = layers.n_layers();
    ensure(n_layers > 0 && membranes.len() == n_layers, || {
        format!("{} membrane records for {n_layers} layers", membranes.len())
    })?;
    ensure(surrogates.len() == 1 || surrogates.len() == n_layers, || {
        format!("need 1 or {n_layers} surrogates, got {}", surrogates.len())
    })?;
    surrogates.iter().try_for_each(SurrogateSpec::validate)?;
    let surrogate = |l: usize| if surrogates.len() == 1 { &surrogates[0] } else { &surrogates[l] };
    let steps = membranes[n_layers - 1].n_steps();
    ensure(membranes.iter().all(|m| m.n_steps() == steps), || "membrane records differ in length".into())?;
    let alpha = params.alpha();

    let mut spikes = vec![None; n_layers];
    let mut activity = vec![f64::NAN; n_layers];
    let mut dv_keep: Vec<Vec<f64>> = vec![Vec::new(); n_layers];

    // Δv of the layer currently being propagated through; `None` means all ones.
    let mut dv: Option<Vec<f64>> = None;
    for l in (0..n_layers).rev() {
        let layer = layers.layer(l)?;
        let (n_pre, n_post) = (layer.n_pre(), layer.n_post());
        ensure(membranes[l].n_neurons == n_post, || format!("layer {l} membrane width mismatch"))?;
        if keep_tensors {
            dv_keep[l] = dv.clone().unwrap_or_else(|| vec![1.0; steps * n_post]);
        }
        let wt = layer.post_major();
        let mut ds = vec![0.0; steps * n_pre];
        match &dv {
            None => {
                let mut colsum = vec![0.0; n_pre];
                for i in 0..n_post {
                    let row = &wt[i * n_pre..(i + 1) * n_pre];
                    colsum.iter_mut().zip(row).for_each(|(c, w)| *c += w);
                }
                for t in 0..steps {
                    ds[t * n_pre..(t + 1) * n_pre].copy_from_slice(&colsum);
                }
            }
            Some(dv) => {
                for t in 0..steps {
                    let u = &mut ds[t * n_pre..(t + 1) * n_pre];
                    for (i, &g) in dv[t * n_post..(t + 1) * n_post].iter().enumerate() {
                        if g != 0.0 {
                            let row = &wt[i * n_pre..(i + 1) * n_pre];
                            u.iter_mut().zip(row).for_each(|(x, w)| *x += g * w);
                        }
                    }
                }
            }
        }
        for t in (0..steps.saturating_sub(1)).rev() {
            let (head, tail) = ds.split_at_mut((t + 1) * n_pre);
            let cur = &mut head[t * n_pre..];
            cur.iter_mut().zip(&tail[..n_pre]).for_each(|(x, next)| *x += alpha * next);
        }
        let mut stats = Welford::default();
        for &x in &ds {
            if !x.is_finite() {
                return Err(Error::Numerical(format!("non-finite spike gradient below layer {l}")));
            }
            stats.push(x);
        }

        if l > 0 {
            let s = surrogate(l - 1);
            let m = membranes[l - 1];
            let mut next_dv = vec![0.0; steps * n_pre];
            let mut act = 0.0;
            for (k, (g, &v)) in next_dv.iter_mut().zip(&m.values).enumerate() {
                let h = s.scaled(v, params.v_th);
                act += h * h;
                *g = h * ds[k];
            }
            activity[l - 1] = act / (steps * n_pre).max(1) as f64;
            dv = Some(next_dv);
        }
        spikes[l] = Some(SpikeGradient {
            n_neurons: n_pre,
            n_steps: steps,
            mean: stats.mean(),
            variance: stats.variance(),
            ds: keep_tensors.then_some(ds),
        });
    }
    Ok(GradientTrace {
        spikes: spikes.into_iter().map(|s| s.expect("every layer visited")).collect(),
        surrogate_activity: activity,
        dv: keep_tensors.then_some(dv_keep),
    })
}

/// A spike output nudged by `delta`, for finite-difference checks.
#[derive(Clone, Copy, Debug)]
pub struct Nudge {
    /// 0 for the network input, `l + 1` for the output of layer `l`.
    pub population: usize,
    pub neuron: usize,
    pub step: usize,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct SmoothRun {
    pub loss: f64,
    pub membranes: Vec<MembraneTrace>,
}

/// A reset-free network whose spike function is `s = kappa S(v)` with
/// `S' = H'`, so that the surrogate gradient is its exact gradient.
pub fn smooth_forward(
    layers: &[LayerTopology],
    params: &LifParams,
    input: &[Vec<f64>],
    surrogates: &[SurrogateSpec],
    nudge: Option<Nudge>,
) -> Result<SmoothRun> {
    ensure(!layers.is_empty(), || "no layers".into())?;
    ensure(surrogates.len() == 1 || surrogates.len() == layers.len(), || "need 1 or one surrogate per layer".into())?;
    let steps = input.len();
    let alpha = params.alpha();
    let drive = (1.0 - alpha) * params.i_ext;
    let mut below: Vec<Vec<f64>> = input.to_vec();
    apply_nudge(&mut below, 0, nudge);
    let mut membranes = Vec::with_capacity(layers.len());
    let mut loss = 0.0;
    for (l, layer) in layers.iter().enumerate() {
        let s = if surrogates.len() == 1 { &surrogates[0] } else { &surrogates[l] };
        let n = layer.n_post();
        ensure(below.iter().all(|x| x.len() == layer.n_pre()), || format!("layer {l} input width mismatch"))?;
        let mut v = vec![params.v_r; n];
        let mut trace = MembraneTrace::new(n);
        let mut out = vec![vec![0.0; n]; steps];
        for t in 0..steps {
            for i in 0..n {
                let net: f64 = (0..layer.n_pre()).map(|j| layer.weight(i, j) * below[t][j]).sum();
                v[i] = alpha * v[i] + drive + net;
                out[t][i] = s.kappa * s.antiderivative(v[i], params.v_th);
            }
            trace.values.extend_from_slice(&v);
            if l + 1 == layers.len() {
                loss += v.iter().sum::<f64>();
            }
        }
        apply_nudge(&mut out, l + 1, nudge);
        membranes.push(trace);
        below = out;
    }
    Ok(SmoothRun { loss, membranes })
}

fn apply_nudge(x: &mut [Vec<f64>], population: usize, nudge: Option<Nudge>) {
    if let Some(n) = nudge.filter(|n| n.population == population) {
        x[n.step][n.neuron] += n.delta;
    }
}

/// Gradients of the smooth network, from the same backward recursion used
/// for spiking runs.
pub fn smooth_backward(layers: &[LayerTopology], params: &LifParams, run: &SmoothRun, surrogates: &[SurrogateSpec]) -> Result<GradientTrace> {
    let m: Vec<&MembraneTrace> = run.membranes.iter().collect();
    backward_from_membranes(layers, &m, params, surrogates, true)
}
