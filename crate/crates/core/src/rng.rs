//! Counter-based random streams.
//!
//! Every random decision in the crate comes from a ChaCha8 stream keyed by a
//! master seed and selected by a tuple of indices (configuration, attribute,
//! cell, ...). Results therefore never depend on iteration order or on how
//! work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tuple of indices into one 64-bit key.
pub fn mix(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5EED_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Stream selected by `parts` under `seed`.
pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(parts));
    rng
}

/// A child seed, for handing a reproducible seed to a sub-computation.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    splitmix64(seed ^ mix(parts))
}
