//! One discrete-time update of a LIF population.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::correction::{NeuronStep, SpikeCorrection};
use crate::error::{Error, Result};
use crate::rng::{rng_from, Rng};
use crate::sim::params::LifParams;
use crate::sim::weights::{LayerTopology, WeightMatrix};

/// Where input spikes sit inside a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpikeTiming {
    /// At the start, undecayed: `v <- alpha v + (1 - alpha) I + W s`.
    #[default]
    IntervalStart,
    /// At the end, decayed by `alpha` as in some simulator defaults. Only
    /// useful to show the rate vanishing as `dt` grows.
    IntervalEnd,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub v: Vec<f64>,
    rng: Rng,
}

impl SimState {
    pub fn new(v: Vec<f64>, seed: u64) -> Self {
        SimState { v, rng: rng_from(seed) }
    }

    /// All membranes at `v_r`.
    pub fn at_reset(params: &LifParams, n: usize, seed: u64) -> Self {
        SimState::new(vec![params.v_r; n], seed)
    }
}

/// Result of one step.
#[derive(Clone, Debug, Default)]
pub struct StepOutput {
    /// Sorted indices of the neurons that spiked.
    pub spikes: Vec<u32>,
    /// How many of those spikes came from the correction.
    pub corrected: usize,
    /// Membrane after integration, before reset.
    pub pre_reset: Vec<f64>,
}

/// Reusable buffers for stepping one population.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub timing: SpikeTiming,
    signed_sum: Vec<i32>,
    signed_count: Vec<u32>,
    net: Vec<f64>,
    exc: Vec<u32>,
    inh: Vec<u32>,
    received: Vec<Vec<f64>>,
}

impl Stepper {
    pub fn new(n_post: usize, timing: SpikeTiming) -> Self {
        Stepper {
            timing,
            signed_sum: vec![0; n_post],
            signed_count: vec![0; n_post],
            net: vec![0.0; n_post],
            exc: vec![0; n_post],
            inh: vec![0; n_post],
            received: Vec::new(),
        }
    }

    /// Excitatory counts, inhibitory counts and net input of the last step.
    pub fn last_inputs(&self) -> (&[u32], &[u32], &[f64]) {
        (&self.exc, &self.inh, &self.net)
    }

    pub fn step(
        &mut self,
        state: &mut SimState,
        params: &LifParams,
        topology: &LayerTopology,
        input: &[u32],
        correction: Option<&dyn SpikeCorrection>,
        out: &mut StepOutput,
    ) -> Result<()> {
        let n = topology.n_post();
        if state.v.len() != n {
            return Err(Error::Dimension(format!("state has {} neurons, layer has {n}", state.v.len())));
        }
        if self.net.len() != n {
            *self = Stepper::new(n, self.timing);
        }
        if let Some(&bad) = input.iter().find(|&&i| i as usize >= topology.n_pre()) {
            return Err(Error::Dimension(format!("input index {bad} out of range for {} sources", topology.n_pre())));
        }
        let want_weights = correction.is_some_and(|c| c.needs_weights());
        self.accumulate(topology, input, want_weights);

        let a = params.alpha();
        let drive = (1.0 - a) * params.i_ext;
        let input_gain = match self.timing {
            SpikeTiming::IntervalStart => 1.0,
            SpikeTiming::IntervalEnd => a,
        };
        out.spikes.clear();
        out.corrected = 0;
        out.pre_reset.resize(n, 0.0);
        for j in 0..n {
            let v_prev = state.v[j];
            let v_det = a * v_prev + drive;
            let v = v_det + input_gain * self.net[j];
            out.pre_reset[j] = v;
            let mut spike = v >= params.v_th;
            if !spike {
                if let Some(c) = correction {
                    let draw = state.rng.next_u64();
                    let step = NeuronStep {
                        params,
                        v_prev,
                        v_det,
                        net_input: self.net[j],
                        n_exc: self.exc[j],
                        n_inh: self.inh[j],
                        weights: if want_weights { &self.received[j] } else { &[] },
                    };
                    if c.crossed(&step, draw) {
                        spike = true;
                        out.corrected += 1;
                    }
                }
            }
            if spike {
                out.spikes.push(j as u32);
                state.v[j] = params.v_r;
            } else {
                state.v[j] = v;
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, topology: &LayerTopology, input: &[u32], want_weights: bool) {
        let n = topology.n_post();
        if want_weights {
            self.received.resize_with(n, Vec::new);
            self.received.iter_mut().for_each(Vec::clear);
        }
        match topology.matrix() {
            WeightMatrix::Signed { w, signs } => {
                self.signed_sum.fill(0);
                self.signed_count.fill(0);
                for &i in input {
                    let row = &signs[i as usize * n..(i as usize + 1) * n];
                    for ((s, c), &x) in self.signed_sum.iter_mut().zip(self.signed_count.iter_mut()).zip(row) {
                        *s += x as i32;
                        *c += (x != 0) as u32;
                    }
                    if want_weights {
                        for (j, &x) in row.iter().enumerate() {
                            if x != 0 {
                                self.received[j].push(w * x as f64);
                            }
                        }
                    }
                }
                for j in 0..n {
                    let (k, c) = (self.signed_sum[j], self.signed_count[j] as i32);
                    self.net[j] = w * k as f64;
                    self.exc[j] = ((c + k) / 2) as u32;
                    self.inh[j] = ((c - k) / 2) as u32;
                }
            }
            WeightMatrix::Dense { values } => {
                self.net.fill(0.0);
                self.exc.fill(0);
                self.inh.fill(0);
                for &i in input {
                    let row = &values[i as usize * n..(i as usize + 1) * n];
                    for (j, &x) in row.iter().enumerate() {
                        self.net[j] += x;
                        self.exc[j] += (x > 0.0) as u32;
                        self.inh[j] += (x < 0.0) as u32;
                    }
                    if want_weights {
                        for (j, &x) in row.iter().enumerate() {
                            if x != 0.0 {
                                self.received[j].push(x);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// One step with freshly allocated buffers.
pub fn step_population(
    state: &mut SimState,
    params: &LifParams,
    topology: &LayerTopology,
    input: &[u32],
    correction: Option<&dyn SpikeCorrection>,
) -> Result<StepOutput> {
    let mut out = StepOutput::default();
    Stepper::new(topology.n_post(), SpikeTiming::IntervalStart).step(state, params, topology, input, correction, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: f64) -> LayerTopology {
        LayerTopology::from_rows(&[vec![w]]).unwrap()
    }

    #[test]
    fn zero_input_decays() {
        let p = LifParams::new(0.01, 1.0, 0.2, 0.0, 1e-3).unwrap();
        let mut s = SimState::at_reset(&p, 1, 0);
        let out = step_population(&mut s, &p, &single(0.5), &[], None).unwrap();
        assert!(out.spikes.is_empty());
        assert!((s.v[0] - 0.2 * p.alpha()).abs() < 1e-15);
    }

    #[test]
    fn threshold_input_spikes_and_resets() {
        let p = LifParams::standard(0.3, 1e-3);
        let mut s = SimState::new(vec![0.5], 0);
        let w = p.v_th - p.deterministic(0.5);
        let out = step_population(&mut s, &p, &single(w), &[0], None).unwrap();
        assert_eq!(out.spikes, vec![0]);
        assert_eq!(s.v[0], p.v_r);
        assert!((out.pre_reset[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let p = LifParams::standard(0.0, 1e-3);
        let mut s = SimState::at_reset(&p, 2, 0);
        assert!(step_population(&mut s, &p, &single(0.1), &[], None).is_err());
        let mut s = SimState::at_reset(&p, 1, 0);
        assert!(step_population(&mut s, &p, &single(0.1), &[3], None).is_err());
    }

    #[test]
    fn interval_end_decays_input() {
        let p = LifParams::standard(0.0, 1e-3);
        let mut s = SimState::at_reset(&p, 1, 0);
        let mut st = Stepper::new(1, SpikeTiming::IntervalEnd);
        let mut out = StepOutput::default();
        st.step(&mut s, &p, &single(0.5), &[0], None, &mut out).unwrap();
        assert!((s.v[0] - 0.5 * p.alpha()).abs() < 1e-15);
    }

    #[test]
    fn signed_counts() {
        use crate::sim::weights::WeightSpec;
        let spec = WeightSpec::two_point(0.1, 1.0);
        let layer = LayerTopology::realise(6, 3, &spec, 4).unwrap();
        let p = LifParams::standard(0.0, 1e-3);
        let mut s = SimState::at_reset(&p, 3, 0);
        let mut st = Stepper::new(3, SpikeTiming::IntervalStart);
        let mut out = StepOutput::default();
        st.step(&mut s, &p, &layer, &[0, 2, 3, 5], None, &mut out).unwrap();
        let (exc, inh, net) = st.last_inputs();
        for j in 0..3 {
            let ws: Vec<f64> = [0, 2, 3, 5].iter().map(|&i| layer.weight(j, i)).collect();
            assert_eq!(exc[j] as usize, ws.iter().filter(|&&w| w > 0.0).count());
            assert_eq!(inh[j] as usize, ws.iter().filter(|&&w| w < 0.0).count());
            assert!((net[j] - ws.iter().sum::<f64>()).abs() < 1e-15);
        }
    }
}
