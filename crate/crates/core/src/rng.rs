//! Seed derivation. Every random stream in a run is a pure function of the
//! master seed and a short path of integers (repeat, layer, purpose, ...).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p.wrapping_add(0x5851_f42d))))
}

pub fn rng_from(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Map 64 random bits to a uniform in [0, 1).
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

// Stream labels, kept distinct so that adding a consumer never shifts another.
pub(crate) const STREAM_WEIGHTS: u64 = 1;
pub(crate) const STREAM_INPUT: u64 = 2;
pub(crate) const STREAM_CORRECTION: u64 = 3;
