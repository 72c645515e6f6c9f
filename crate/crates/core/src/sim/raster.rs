//! Sparse spike records.

use crate::error::{ensure, Result};

/// Input received by each neuron in each bin, stored step-major.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BinInputs {
    n_neurons: usize,
    exc: Vec<u32>,
    inh: Vec<u32>,
    net: Vec<f64>,
}

impl BinInputs {
    pub fn new(n_neurons: usize) -> Self {
        BinInputs { n_neurons, ..Default::default() }
    }

    pub fn push_step(&mut self, exc: &[u32], inh: &[u32], net: &[f64]) {
        debug_assert!(exc.len() == self.n_neurons && inh.len() == self.n_neurons && net.len() == self.n_neurons);
        self.exc.extend_from_slice(exc);
        self.inh.extend_from_slice(inh);
        self.net.extend_from_slice(net);
    }

    pub fn n_steps(&self) -> usize {
        if self.n_neurons == 0 { 0 } else { self.net.len() / self.n_neurons }
    }

    pub fn exc(&self, neuron: usize, step: usize) -> u32 {
        self.exc[step * self.n_neurons + neuron]
    }

    pub fn inh(&self, neuron: usize, step: usize) -> u32 {
        self.inh[step * self.n_neurons + neuron]
    }

    pub fn net(&self, neuron: usize, step: usize) -> f64 {
        self.net[step * self.n_neurons + neuron]
    }
}

/// Binary spike record of one population, stored as the list of active neurons
/// per step. Optionally carries the per-bin input counts seen by the population.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeRaster {
    n_neurons: usize,
    dt: f64,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    inputs: Option<BinInputs>,
}

impl SpikeRaster {
    pub fn new(n_neurons: usize, dt: f64) -> Self {
        SpikeRaster { n_neurons, dt, offsets: vec![0], indices: Vec::new(), inputs: None }
    }

    /// Build from a dense `[neuron][step]` table.
    pub fn from_dense(spikes: &[Vec<bool>], dt: f64) -> Result<Self> {
        let n = spikes.len();
        let steps = spikes.first().map_or(0, Vec::len);
        ensure(spikes.iter().all(|r| r.len() == steps), || "ragged spike table".into())?;
        let mut r = SpikeRaster::new(n, dt);
        let mut active = Vec::new();
        for t in 0..steps {
            active.clear();
            active.extend((0..n).filter(|&i| spikes[i][t]).map(|i| i as u32));
            r.push_step(&active);
        }
        Ok(r)
    }

    /// Append one step. `active` must be sorted and in range.
    pub fn push_step(&mut self, active: &[u32]) {
        debug_assert!(active.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(active.iter().all(|&i| (i as usize) < self.n_neurons));
        self.indices.extend_from_slice(active);
        self.offsets.push(self.indices.len());
    }

    pub(crate) fn inputs_mut(&mut self) -> &mut BinInputs {
        let n = self.n_neurons;
        self.inputs.get_or_insert_with(|| BinInputs::new(n))
    }

    pub fn inputs(&self) -> Option<&BinInputs> {
        self.inputs.as_ref()
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn n_steps(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    /// Sorted indices of the neurons that spiked at `step`.
    pub fn active(&self, step: usize) -> &[u32] {
        &self.indices[self.offsets[step]..self.offsets[step + 1]]
    }

    pub fn is_spiking(&self, neuron: usize, step: usize) -> bool {
        self.active(step).binary_search(&(neuron as u32)).is_ok()
    }

    pub fn spike_count(&self) -> usize {
        self.indices.len()
    }

    pub fn neuron_counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.n_neurons];
        self.indices.iter().for_each(|&i| c[i as usize] += 1);
        c
    }

    /// Spikes per neuron per second over the whole record.
    pub fn population_rate(&self) -> f64 {
        if self.n_steps() == 0 || self.n_neurons == 0 {
            return 0.0;
        }
        self.spike_count() as f64 / (self.n_neurons as f64 * self.duration())
    }

    /// Fraction of neurons active at each step.
    pub fn activity(&self) -> Vec<f64> {
        (0..self.n_steps()).map(|t| self.active(t).len() as f64 / self.n_neurons as f64).collect()
    }

    /// Copy of steps `start..end`, input records included.
    pub fn window(&self, start: usize, end: usize) -> SpikeRaster {
        let end = end.min(self.n_steps());
        let start = start.min(end);
        let mut r = SpikeRaster::new(self.n_neurons, self.dt);
        for t in start..end {
            r.push_step(self.active(t));
        }
        if let Some(inp) = &self.inputs {
            let n = self.n_neurons;
            r.inputs = Some(BinInputs {
                n_neurons: n,
                exc: inp.exc[start * n..end * n].to_vec(),
                inh: inp.inh[start * n..end * n].to_vec(),
                net: inp.net[start * n..end * n].to_vec(),
            });
        }
        r
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        let mut d = vec![vec![false; self.n_steps()]; self.n_neurons];
        for t in 0..self.n_steps() {
            for &i in self.active(t) {
                d[i as usize][t] = true;
            }
        }
        d
    }
}
