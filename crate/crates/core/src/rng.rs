//! Seeded, splittable randomness.
//!
//! Every stochastic operation in the crate takes an explicit RNG so that
//! runs are reproducible bit-for-bit. Independent streams for sweep runs
//! are derived with [`derive_stream`], a bijective counter mix: for a fixed
//! base seed, distinct run indices can never collide.

use rand_chacha::rand_core::SeedableRng;

/// The one RNG used throughout: seedable and stable across platforms.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Construct an RNG from a bare seed.
pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; a bijection on u64.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive the seed of stream `index` from `base`.
///
/// `index -> splitmix64(index) -> xor base -> splitmix64` composes three
/// bijections, so the map is injective in `index` for any fixed `base`.
pub fn derive_stream(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// RNG for stream `index` of a sweep rooted at `base`.
pub fn stream_rng(base: u64, index: u64) -> SeededRng {
    seeded(derive_stream(base, index))
}
