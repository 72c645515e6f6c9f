use log::warn;
use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::rng::rng_from;
use crate::sim::raster::SpikeRaster;

/// Independent Bernoulli spike trains with per-bin probability `rate * dt`.
///
/// A bin holds at most one spike per source. Probabilities above one are an
/// error; exactly one is accepted with a warning because every bin then fires
/// and the source no longer behaves like a Poisson process.
pub fn poisson_spikes(rate: f64, n_sources: usize, steps: usize, dt: f64, seed: u64) -> Result<SpikeRaster> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(invalid(format!("input rate must be finite and >= 0, got {rate}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let p = rate * dt;
    if p > 1.0 + 1e-12 {
        return Err(invalid(format!(
            "rate * dt = {p} exceeds 1: a bin can hold at most one spike per source (single-spike-per-bin hypothesis); reduce dt below {}",
            1.0 / rate
        )));
    }
    let p = p.min(1.0);
    if p >= 1.0 {
        warn!("rate * dt = 1: every source fires in every bin, the input generators can no longer keep up");
    }
    let mut rng = rng_from(seed);
    let mut raster = SpikeRaster::new(n_sources, dt);
    if p == 0.0 || n_sources == 0 {
        (0..steps).for_each(|_| raster.push_step(&[]));
        return Ok(raster);
    }

    if p >= 0.1 {
        let mut active = Vec::with_capacity(n_sources);
        for _ in 0..steps {
            active.clear();
            for i in 0..n_sources {
                if p >= 1.0 || rng.random::<f64>() < p {
                    active.push(i as u32);
                }
            }
            raster.push_step(&active);
        }
        return Ok(raster);
    }

    // Sparse regime: jump between spikes with geometric gaps per source, then
    // bucket by step. Same law as one Bernoulli per bin.
    let ln_q = (-p).ln_1p();
    let mut per_step = vec![0usize; steps + 1];
    let mut events: Vec<(u32, u32)> = Vec::new();
    for i in 0..n_sources {
        let mut t = 0usize;
        loop {
            let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
            let gap = (u.ln() / ln_q).floor();
            if !gap.is_finite() || gap >= (steps - t) as f64 {
                break;
            }
            t += gap as usize;
            events.push((t as u32, i as u32));
            per_step[t + 1] += 1;
            t += 1;
            if t >= steps {
                break;
            }
        }
    }
    for s in 1..=steps {
        per_step[s] += per_step[s - 1];
    }
    let mut sorted = vec![0u32; events.len()];
    let mut fill = per_step.clone();
    // Sources were visited in increasing order, so each step's list stays sorted.
    for &(t, i) in &events {
        sorted[fill[t as usize]] = i;
        fill[t as usize] += 1;
    }
    for t in 0..steps {
        raster.push_step(&sorted[per_step[t]..per_step[t + 1]]);
    }
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_silent() {
        let r = poisson_spikes(0.0, 100, 50, 1e-3, 1).unwrap();
        assert_eq!(r.spike_count(), 0);
        assert_eq!(r.n_steps(), 50);
    }

    #[test]
    fn rejects_overfull_bins() {
        let e = poisson_spikes(50.0, 10, 10, 0.03, 1).unwrap_err();
        assert!(e.to_string().contains("at most one spike"));
    }

    #[test]
    fn saturated_bins_all_fire() {
        let r = poisson_spikes(50.0, 10, 10, 0.02, 1).unwrap();
        assert_eq!(r.spike_count(), 100);
    }

    fn occupancy_check(rate: f64, dt: f64) {
        let (n, steps) = (1000, 1000);
        let r = poisson_spikes(rate, n, steps, dt, 42).unwrap();
        let p = rate * dt;
        let bins = (n * steps) as f64;
        let se = (p * (1.0 - p) / bins).sqrt();
        let got = r.spike_count() as f64 / bins;
        assert!((got - p).abs() < 3.0 * se, "occupancy {got} vs {p} (se {se})");
    }

    #[test]
    fn bin_occupancy_dense_regime() {
        occupancy_check(200.0, 1e-3);
    }

    #[test]
    fn bin_occupancy_sparse_regime() {
        occupancy_check(50.0, 1e-3);
    }

    #[test]
    fn deterministic() {
        let a = poisson_spikes(30.0, 50, 200, 1e-3, 9).unwrap();
        let b = poisson_spikes(30.0, 50, 200, 1e-3, 9).unwrap();
        assert_eq!(a, b);
    }
}
