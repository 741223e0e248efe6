//! Seed expansion.
//!
//! One root seed feeds every random stream in a run. A stream is addressed by
//! a purpose tag and an index; its 64-bit seed is the splitmix64 finalizer
//! applied to `root + GOLDEN * (mix(tag) + index + 1)`. Stream `i` never depends
//! on how many other streams are drawn, so growing a batch leaves the earlier
//! trajectories untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Purpose tags for derived streams.
pub mod tag {
    pub const INITIAL: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const EPOCH: u64 = 4;
    pub const INIT_WEIGHTS: u64 = 5;
    pub const GP: u64 = 6;
    pub const LENGTHSCALE: u64 = 7;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, tag: u64, index: u64) -> u64 {
    let offset = splitmix64(tag.wrapping_mul(GOLDEN)).wrapping_add(index).wrapping_add(1);
    splitmix64(root.wrapping_add(GOLDEN.wrapping_mul(offset)))
}

pub fn stream(root: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tag, index))
}
