//! Reproducible randomness for mixture simulation.
//!
//! Outputs must be byte-identical across platforms and releases, so every
//! random choice flows through primitives whose algorithms are pinned here:
//!
//! * **Generator**: ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), a
//!   named, seedable, portable stream cipher RNG.
//! * **Seed expansion**: a 64-bit seed is expanded to the 32-byte ChaCha
//!   key by four consecutive outputs of the SplitMix64 sequence,
//!   little-endian ([`rng_from_seed`]).
//! * **Per-sample derivation**: sample `i` of a run seeded with `s` uses
//!   `sample_seed(s, i) = mix64(s + (i + 1) * 0x9E3779B97F4A7C15)` where
//!   `mix64` is the SplitMix64 finalizer ([`sample_seed`]). Samples are
//!   therefore independent of generation order and parallelizable.
//! * **Bounded draws**: integers in a range come from Lemire's widening
//!   multiply with rejection ([`uniform_below`]), which is exactly uniform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer: the bijective mixing function applied to the
/// advancing state of the SplitMix64 sequence.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9E3779B97F4A7C15;

/// Seed for the `index`-th sample of a run: the `(index + 1)`-th output of
/// the SplitMix64 sequence started at `run_seed`.
pub fn sample_seed(run_seed: u64, index: u64) -> u64 {
    mix64(run_seed.wrapping_add((index.wrapping_add(1)).wrapping_mul(GOLDEN_GAMMA)))
}

/// ChaCha8 generator keyed by the SplitMix64 expansion of `seed`.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Exactly uniform draw from `0..bound` via widening multiply with
/// rejection. `bound` must be nonzero.
pub fn uniform_below(rng: &mut impl RngCore, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    // 2^64 mod bound: values below this threshold in the low word would
    // bias the high word and are re-drawn.
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let wide = u128::from(rng.next_u64()) * u128::from(bound);
        if wide as u64 >= threshold {
            return (wide >> 64) as u64;
        }
    }
}

/// Uniform draw from the inclusive range `lo..=hi`.
pub fn uniform_inclusive(rng: &mut impl RngCore, lo: u64, hi: u64) -> u64 {
    debug_assert!(lo <= hi);
    let span = hi - lo;
    if span == u64::MAX {
        return rng.next_u64();
    }
    lo + uniform_below(rng, span + 1)
}

/// First `count` entries of a uniformly random permutation of `0..n`
/// (partial Fisher–Yates): a sample without replacement.
pub fn sample_indices(rng: &mut impl RngCore, n: usize, count: usize) -> alloc::vec::Vec<usize> {
    debug_assert!(count <= n);
    let mut indices: alloc::vec::Vec<usize> = (0..n).collect();
    for k in 0..count {
        let pick = k + uniform_below(rng, (n - k) as u64) as usize;
        indices.swap(k, pick);
    }
    indices.truncate(count);
    indices
}
