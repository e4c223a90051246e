//! Seed handling.
//!
//! Every stochastic routine takes a plain `u64` seed. Independent streams for
//! replicates and sub-components are derived with [`derive_seed`], which mixes
//! a stream tag into the parent seed with the SplitMix64 finalizer. Given the
//! same parent seed and tag the derived seed is stable across runs, threads
//! and platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags for the components that draw randomness.
pub mod tag {
    pub const DATA: u64 = 0x01;
    pub const RESPONSES: u64 = 0x02;
    pub const SPLITS: u64 = 0x03;
    pub const POISSON: u64 = 0x04;
    pub const THINNING: u64 = 0x05;
    pub const HEIGHTS: u64 = 0x06;
    pub const CHAIN: u64 = 0x07;
    pub const REPLICATE: u64 = 0x08;
    pub const LEFT: u64 = 0x09;
    pub const RIGHT: u64 = 0x0a;
    pub const URN: u64 = 0x0b;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a stream `tag`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Seed for replicate `index` of a parallel batch.
pub fn replicate_seed(seed: u64, index: usize) -> u64 {
    derive_seed(derive_seed(seed, tag::REPLICATE), index as u64)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
