//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a
//! master seed plus a tag path, so results do not depend on execution
//! order or parallelism degree.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the experiment harness.
pub mod stream {
    pub const RESAMPLE: u64 = 0x01;
    pub const PARTITION: u64 = 0x02;
    pub const ANCHOR: u64 = 0x03;
    pub const REDUCER: u64 = 0x04;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a tag path.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &t in tags {
        state = splitmix64(state ^ t.wrapping_mul(0x2545f4914f6cdd1d));
    }
    state
}

/// A seeded ChaCha stream for the given tag path.
pub fn stream_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}
