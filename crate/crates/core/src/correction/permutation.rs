//! Crossing by sampling one arrival order of the bin's inputs.

use rand::seq::SliceRandom;

use crate::rng::rng_from;

/// Spike if the bin's inputs, applied in one random order, lift `v_det` to
/// threshold at any point.
pub fn permutation_step(v_det: f64, weights: &[f64], v_th: f64, seed: u64) -> bool {
    if v_det >= v_th || v_det + weights.iter().sum::<f64>() >= v_th {
        return true;
    }
    let mut order = weights.to_vec();
    order.shuffle(&mut rng_from(seed));
    crosses_in_order(v_det, &order, v_th)
}

fn crosses_in_order(v_det: f64, weights: &[f64], v_th: f64) -> bool {
    let mut v = v_det;
    for w in weights {
        v += w;
        if v >= v_th {
            return true;
        }
    }
    false
}

/// Batched form: every neuron's list is zero-padded to the longest list
/// before shuffling, matching a fixed-width tensor implementation. Padding
/// does not change which prefixes reach threshold.
pub fn permutation_step_batch(v_det: &[f64], weights: &[Vec<f64>], v_th: f64, seeds: &[u64]) -> Vec<bool> {
    assert_eq!(v_det.len(), weights.len());
    assert_eq!(v_det.len(), seeds.len());
    let width = weights.iter().map(Vec::len).max().unwrap_or(0);
    let mut padded = Vec::with_capacity(width);
    v_det
        .iter()
        .zip(weights)
        .zip(seeds)
        .map(|((&v, w), &seed)| {
            if v >= v_th || v + w.iter().sum::<f64>() >= v_th {
                return true;
            }
            padded.clear();
            padded.extend_from_slice(w);
            padded.resize(width, 0.0);
            padded.shuffle(&mut rng_from(seed));
            crosses_in_order(v, &padded, v_th)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn net_crossing_always_spikes() {
        assert!(permutation_step(0.5, &[0.3, 0.3], 1.0, 0));
    }

    #[test]
    fn plus_minus_pair_is_half() {
        let hits = (0..20_000u64).filter(|&s| permutation_step(0.9, &[0.2, -0.2], 1.0, s)).count();
        let p = hits as f64 / 20_000.0;
        assert!((p - 0.5).abs() < 3.0 * (0.25f64 / 20_000.0).sqrt() + 1e-9, "p = {p}");
    }

    #[test]
    fn no_inputs_no_spike() {
        assert!(!permutation_step(0.5, &[], 1.0, 3));
    }

    #[test]
    fn padding_does_not_change_outcomes() {
        let v = vec![0.9, 0.7];
        let w = vec![vec![0.2, -0.2], vec![0.1, 0.0, 0.0, 0.0]];
        let n = 20_000u64;
        let mut hits = 0;
        for s in 0..n {
            let out = permutation_step_batch(&v, &w, 1.0, &[2 * s, 2 * s + 1]);
            assert!(!out[1]);
            hits += out[0] as usize;
        }
        let p = hits as f64 / n as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "p = {p}");
    }
}
