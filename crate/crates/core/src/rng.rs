//! Seed lineage.
//!
//! Every random stream in a run is a ChaCha8 generator seeded from a 64-bit
//! value derived from its parent seed, a stream tag and an index. Children
//! never share state with their parent, so any subtree of the computation can
//! be replayed (or run in parallel) from its recorded seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags. Distinct tags keep sibling streams disjoint.
pub mod tag {
    pub const INIT_PHI: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const EVAL: u64 = 3;
    pub const ACQUISITION: u64 = 4;
    pub const GENERATION: u64 = 5;
    pub const CANDIDATE: u64 = 6;
    pub const DOMAIN: u64 = 7;
    pub const RETRY: u64 = 8;
    pub const ROLLOUT: u64 = 9;
    pub const FINAL: u64 = 10;
    pub const UDR_PHI: u64 = 11;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `(tag, index)` of `parent`.
pub fn derive_seed(parent: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ splitmix64(tag)).wrapping_add(index))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(parent: u64, tag: u64, index: u64) -> SimRng {
    rng_from_seed(derive_seed(parent, tag, index))
}
