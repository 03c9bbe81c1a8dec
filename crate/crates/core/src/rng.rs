//! Seeded random streams.
//!
//! Every stochastic step draws from a ChaCha stream keyed by the run seed and
//! a tuple of tags (phase, task index, ...), so results do not depend on the
//! order in which independent rollouts are executed.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(seed), |acc, &t| mix64(acc ^ mix64(t)))
}

pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, tags))
}
