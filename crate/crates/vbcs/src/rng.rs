//! Seeding and stream splitting.
//!
//! Every stochastic component of the crate draws from [`ChaCha8Rng`], a
//! portable counter-based generator whose output is fixed by its 64-bit seed
//! alone. Independent streams (per trial, per sweep point, per purpose) are
//! derived from a base seed with [`derive_seed`], which chains a SplitMix64
//! finalizer over the base seed and a list of tag words. Two derived streams
//! collide only if their full tag lists collide, so parallel trials are
//! reproducible and order-independent.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; full-period mixing of one 64-bit word.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a list of tag words.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = base;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0xff51_afd7_ed55_8ccd);
        out ^= splitmix64(&mut state);
    }
    out
}

/// Builds the crate-wide generator for a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
