//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit generator. Child streams are
//! derived from `(parent seed, index)` so that replicate `b` of repetition `k`
//! sees the same numbers no matter how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Stream = ChaCha8Rng;

/// SplitMix64 finaliser.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix(mix(parent) ^ mix(index.wrapping_add(0x6A09_E667_F3BC_C909)))
}

/// A fresh stream seeded by `seed`.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The `index`-th child stream of `parent`.
pub fn child_stream(parent: u64, index: u64) -> Stream {
    stream(derive_seed(parent, index))
}
