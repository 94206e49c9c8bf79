//! Deterministic stream derivation for Monte Carlo runs.
//!
//! Every random quantity in a run is drawn from a ChaCha stream derived from
//! the master seed and a stream id (trial index, user index, noise slot, ...),
//! so users are independent yet reproducible and trials can execute on
//! parallel workers without sharing RNG state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates nearby ids.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream id.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    mix(parent ^ mix(stream))
}

/// Seeded generator for the given stream of a parent seed.
pub fn derive_rng(parent: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(parent, stream))
}
