//! Splittable deterministic randomness.
//!
//! Every randomized component receives an [`RngStream`] and derives child
//! streams for its internal pieces (repetitions, tree nodes, samples) by
//! integer ids. Identical `(seed, path)` always reproduces the same draws,
//! and distinct paths give streams that behave independently for testing
//! purposes. Streams are cheap value types: the whole state is one 64-bit
//! key mixed through the SplitMix64 finalizer at every split.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
}

/// SplitMix64 finalizer; full-avalanche 64-bit mixer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        RngStream { key: mix(seed) }
    }

    /// Derives the child stream with the given id. Children of the same
    /// parent with distinct ids, and equal ids under distinct parents, all
    /// get distinct keys (up to the 64-bit birthday bound, far beyond any
    /// use in this crate).
    pub fn child(&self, id: u64) -> Self {
        RngStream {
            key: mix(self.key ^ mix(id ^ 0x517c_c1b7_2722_0a95)),
        }
    }

    /// Instantiates the actual generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
