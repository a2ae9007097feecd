//! Reproducible random streams.
//!
//! Every parallel work item draws from its own ChaCha stream keyed by
//! `(seed, tag, index)`, so results do not depend on scheduling or on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags, one per independent consumer of randomness.
pub mod tag {
    pub const PERMUTATION_X: u64 = 1;
    pub const PERMUTATION_Y: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const NULL_TABLE: u64 = 4;
    pub const REPLICATE: u64 = 5;
    pub const METHOD: u64 = 6;
    pub const CLT_DEVIATION: u64 = 7;
    pub const RATE_CHECK: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with a tag and an index into a child seed.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index)
}

/// Generator for work item `index` of consumer `tag`.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}
