//! Seed derivation and named random streams.
//!
//! Streams are ChaCha8 generators keyed by `(seed, label, index)`. Labels are
//! hashed with FNV-1a so the mapping is stable across platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finaliser. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for episode `index` of matrix cell `cell` under `master`.
///
/// Injective over all `(cell, index)` pairs with both components below 2^32:
/// the pair is packed into one word, offset by the master seed, and passed
/// through the bijective finaliser.
pub fn episode_seed(master: u64, cell: u32, index: u32) -> u64 {
    let packed = (u64::from(cell) << 32) | u64::from(index);
    mix64(mix64(master).wrapping_add(packed))
}

/// Derive a sub-seed for a labelled purpose.
pub fn derive(seed: u64, label: &str, index: u64) -> u64 {
    mix64(seed ^ mix64(fnv1a(label).wrapping_add(mix64(index))))
}

/// A fresh generator for a labelled stream.
pub fn stream(seed: u64, label: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive(seed, label, index))
}
