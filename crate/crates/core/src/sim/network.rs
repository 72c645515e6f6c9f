//! Layered feed-forward runs.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::correction::Correction;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, STREAM_CORRECTION};
use crate::sim::params::LifParams;
use crate::sim::population::{SimState, SpikeTiming, StepOutput, Stepper};
use crate::sim::raster::SpikeRaster;
use crate::sim::weights::{LayerTopology, WeightSpec};

/// Something that can hand out the layers of a network one at a time.
pub trait LayerSource {
    fn n_layers(&self) -> usize;
    /// `(n_pre, n_post)` without realising the weights.
    fn dims(&self, index: usize) -> (usize, usize);
    fn layer(&self, index: usize) -> Result<Cow<'_, LayerTopology>>;
}

impl LayerSource for [LayerTopology] {
    fn n_layers(&self) -> usize {
        self.len()
    }

    fn dims(&self, index: usize) -> (usize, usize) {
        (self[index].n_pre(), self[index].n_post())
    }

    fn layer(&self, index: usize) -> Result<Cow<'_, LayerTopology>> {
        Ok(Cow::Borrowed(&self[index]))
    }
}

impl LayerSource for Vec<LayerTopology> {
    fn n_layers(&self) -> usize {
        self.len()
    }

    fn dims(&self, index: usize) -> (usize, usize) {
        self.as_slice().dims(index)
    }

    fn layer(&self, index: usize) -> Result<Cow<'_, LayerTopology>> {
        Ok(Cow::Borrowed(&self[index]))
    }
}

/// A layer described by its distribution and seed; realised on demand so a
/// deep network never holds more than one weight matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerBlueprint {
    pub n_pre: usize,
    pub n_post: usize,
    pub spec: WeightSpec,
    pub seed: u64,
}

impl LayerSource for [LayerBlueprint] {
    fn n_layers(&self) -> usize {
        self.len()
    }

    fn dims(&self, index: usize) -> (usize, usize) {
        (self[index].n_pre, self[index].n_post)
    }

    fn layer(&self, index: usize) -> Result<Cow<'_, LayerTopology>> {
        let b = &self[index];
        LayerTopology::realise(b.n_pre, b.n_post, &b.spec, b.seed).map(Cow::Owned)
    }
}

impl LayerSource for Vec<LayerBlueprint> {
    fn n_layers(&self) -> usize {
        self.len()
    }

    fn dims(&self, index: usize) -> (usize, usize) {
        self.as_slice().dims(index)
    }

    fn layer(&self, index: usize) -> Result<Cow<'_, LayerTopology>> {
        self.as_slice().layer(index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Leading steps excluded from rates and records.
    pub warmup_steps: usize,
    /// Master seed for the correction draws.
    pub seed: u64,
    pub timing: SpikeTiming,
    /// Keep the pre-reset membrane of every neuron and recorded step.
    pub record_membrane: bool,
    /// Keep per-bin excitatory/inhibitory counts and net input.
    pub record_inputs: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { warmup_steps: 0, seed: 0, timing: SpikeTiming::IntervalStart, record_membrane: false, record_inputs: false }
    }
}

/// Pre-reset membrane values, step-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MembraneTrace {
    pub n_neurons: usize,
    pub values: Vec<f64>,
}

impl MembraneTrace {
    pub fn new(n_neurons: usize) -> Self {
        MembraneTrace { n_neurons, values: Vec::new() }
    }

    pub fn n_steps(&self) -> usize {
        if self.n_neurons == 0 { 0 } else { self.values.len() / self.n_neurons }
    }

    pub fn step(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_neurons..(t + 1) * self.n_neurons]
    }

    pub fn get(&self, neuron: usize, t: usize) -> f64 {
        self.values[t * self.n_neurons + neuron]
    }
}

#[derive(Clone, Debug)]
pub struct LayerRun {
    /// Spikes after the warm-up.
    pub raster: SpikeRaster,
    /// Population rate over the recorded window (Hz).
    pub rate: f64,
    /// Spikes added by the correction in the recorded window.
    pub corrected_spikes: usize,
    pub membrane: Option<MembraneTrace>,
}

#[derive(Clone, Debug)]
pub struct NetworkRun {
    pub layers: Vec<LayerRun>,
}

impl NetworkRun {
    pub fn rates(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.rate).collect()
    }
}

/// Simulate the layers in order, each driven by the full spike record of the
/// one below. All layers start at `v_r`.
pub fn run_network<L: LayerSource + ?Sized>(
    layers: &L,
    params: &LifParams,
    input: &SpikeRaster,
    correction: Correction,
    opts: &RunOptions,
) -> Result<NetworkRun> {
    params.validate()?;
    if ((input.dt() - params.dt) / params.dt).abs() > 1e-9 {
        return Err(Error::Dimension(format!("input raster dt {} differs from params dt {}", input.dt(), params.dt)));
    }
    let mut width = input.n_neurons();
    for l in 0..layers.n_layers() {
        let (n_pre, n_post) = layers.dims(l);
        if n_pre != width {
            return Err(Error::Dimension(format!("layer {l} expects {n_pre} inputs but receives {width}")));
        }
        width = n_post;
    }
    let steps = input.n_steps();
    if opts.warmup_steps >= steps && steps > 0 {
        return Err(Error::InvalidParameter(format!("warm-up of {} steps leaves nothing of a {steps}-step run", opts.warmup_steps)));
    }

    let mut runs = Vec::with_capacity(layers.n_layers());
    let mut below: Cow<'_, SpikeRaster> = Cow::Borrowed(input);
    for l in 0..layers.n_layers() {
        let layer = layers.layer(l)?;
        let hook = correction.for_layer(&layer)?;
        let n = layer.n_post();
        let mut state = SimState::at_reset(params, n, derive_seed(opts.seed, &[STREAM_CORRECTION, l as u64]));
        let mut stepper = Stepper::new(n, opts.timing);
        let mut out = StepOutput::default();
        let mut raster = SpikeRaster::new(n, params.dt);
        let mut membrane = opts.record_membrane.then(|| MembraneTrace::new(n));
        let mut corrected = 0;
        for t in 0..steps {
            stepper.step(&mut state, params, &layer, below.active(t), hook.as_deref(), &mut out)?;
            raster.push_step(&out.spikes);
            if opts.record_inputs {
                let (e, i, w) = stepper.last_inputs();
                raster.inputs_mut().push_step(e, i, w);
            }
            if t >= opts.warmup_steps {
                corrected += out.corrected;
                if let Some(m) = membrane.as_mut() {
                    m.values.extend_from_slice(&out.pre_reset);
                }
            }
        }
        let recorded = raster.window(opts.warmup_steps, steps);
        runs.push(LayerRun { rate: recorded.population_rate(), raster: recorded, corrected_spikes: corrected, membrane });
        below = Cow::Owned(raster);
    }
    Ok(NetworkRun { layers: runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::poisson::poisson_spikes;
    use crate::sim::population::step_population;

    #[test]
    fn chain_mismatch_is_reported() {
        let p = LifParams::standard(0.0, 1e-3);
        let layers = vec![LayerTopology::from_rows(&[vec![0.1; 3]]).unwrap()];
        let input = poisson_spikes(10.0, 4, 10, 1e-3, 1).unwrap();
        let e = run_network(&layers, &p, &input, Correction::None, &RunOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Dimension(_)));
    }

    #[test]
    fn one_layer_equals_iterated_steps() {
        let p = LifParams::standard(0.8, 1e-3);
        let spec = WeightSpec::two_point(0.05, 0.5);
        let layer = LayerTopology::realise(200, 50, &spec, 3).unwrap();
        let input = poisson_spikes(50.0, 200, 300, 1e-3, 4).unwrap();
        let run = run_network(std::slice::from_ref(&layer), &p, &input, Correction::None, &RunOptions::default()).unwrap();
        let mut s = SimState::at_reset(&p, 50, 0);
        for t in 0..300 {
            let out = step_population(&mut s, &p, &layer, input.active(t), None).unwrap();
            assert_eq!(out.spikes.as_slice(), run.layers[0].raster.active(t));
        }
    }

    #[test]
    fn blueprints_match_realised_layers() {
        let p = LifParams::standard(0.8, 1e-3);
        let spec = WeightSpec::two_point(0.05, 0.5);
        let bp = vec![
            LayerBlueprint { n_pre: 100, n_post: 80, spec: spec.clone(), seed: 1 },
            LayerBlueprint { n_pre: 80, n_post: 60, spec: spec.clone(), seed: 2 },
        ];
        let real: Vec<LayerTopology> = bp.iter().map(|b| LayerTopology::realise(b.n_pre, b.n_post, &b.spec, b.seed).unwrap()).collect();
        let input = poisson_spikes(50.0, 100, 200, 1e-3, 5).unwrap();
        let opts = RunOptions { seed: 9, ..Default::default() };
        let a = run_network(&bp, &p, &input, Correction::RandomWalk, &opts).unwrap();
        let b = run_network(&real, &p, &input, Correction::RandomWalk, &opts).unwrap();
        for (x, y) in a.layers.iter().zip(&b.layers) {
            assert_eq!(x.raster, y.raster);
        }
    }

    #[test]
    fn warmup_is_excluded() {
        let p = LifParams::standard(0.8, 1e-3);
        let layers = vec![LayerTopology::realise(100, 40, &WeightSpec::two_point(0.05, 0.5), 1).unwrap()];
        let input = poisson_spikes(50.0, 100, 300, 1e-3, 2).unwrap();
        let opts = RunOptions { warmup_steps: 100, record_membrane: true, record_inputs: true, ..Default::default() };
        let run = run_network(&layers, &p, &input, Correction::None, &opts).unwrap();
        let l = &run.layers[0];
        assert_eq!(l.raster.n_steps(), 200);
        assert_eq!(l.membrane.as_ref().unwrap().n_steps(), 200);
        assert_eq!(l.raster.inputs().unwrap().n_steps(), 200);
        let counts: u64 = l.raster.neuron_counts().iter().sum();
        assert!((l.rate - counts as f64 / (40.0 * 0.2)).abs() < 1e-9);
    }
}
