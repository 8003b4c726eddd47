//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`Xoshiro256PlusPlus`]
//! generator. Independent streams (one per signal, one per tree, one per
//! test subset) are keyed by `(base seed, stream index)` and mixed through
//! SplitMix64, so results do not depend on the order in which streams are
//! consumed and parallel generation is reproducible.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output step.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` under `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(base) ^ stream.wrapping_mul(GOLDEN_GAMMA))
}

pub fn stream(base: u64, stream: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(base, stream))
}

/// Domain tags so that e.g. forest seeds and split seeds never collide
/// even when a user passes the same number to both.
pub mod domain {
    pub const SIGNAL: u64 = 0x5349_474E;
    pub const SPLIT: u64 = 0x5350_4C54;
    pub const SUBSET: u64 = 0x5355_4253;
    pub const TREE: u64 = 0x5452_4545;
}

pub fn tagged_stream(base: u64, tag: u64, index: u64) -> Rng {
    stream(derive_seed(base, tag), index)
}
