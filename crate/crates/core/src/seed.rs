//! Deterministic seed derivation for parallel Monte Carlo.
//!
//! Every trial draws from its own generator seeded with
//! `derive_seed(root, index)`, so results do not depend on how trials are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed: `mix(root + mix(index + 1) · φ)`, with φ the 64-bit
/// golden-ratio increment.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    mix(root ^ mix(index.wrapping_add(1)).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Generator for trial `index` under `root`.
pub fn trial_rng(root: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, index))
}
