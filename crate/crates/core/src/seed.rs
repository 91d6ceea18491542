//! Deterministic seed derivation for independent trials.
//!
//! Trial `i` of an experiment with master seed `s` uses
//! `derive_seed(s, i) = splitmix64(s + (i + 1) * 0x9E3779B97F4A7C15)`.
//! This mapping is part of the reproducibility contract and must not change.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// The random stream used by every randomized component.
pub type WalkRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> WalkRng {
    ChaCha8Rng::seed_from_u64(seed)
}
