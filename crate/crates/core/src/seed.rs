//! Seed plumbing. Every stochastic step draws from a ChaCha stream whose seed
//! is derived from the run's global seed and a stable stage tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit seed for `(base, tag)`; independent of call order.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, folded with the base seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(splitmix64(base) ^ h)
}

/// `derive_seed` with a numeric index, e.g. for trials.
pub fn derive_indexed(base: u64, tag: &str, index: u64) -> u64 {
    splitmix64(derive_seed(base, tag) ^ splitmix64(index))
}
