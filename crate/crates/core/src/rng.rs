//! Counter-based random substreams.
//!
//! Every stochastic operation derives the generator for replicate `i` from the
//! user seed and `i` alone, so results do not depend on how work is split
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used by every simulator in the crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// A node in a tree of seeds. Children are addressed by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { key: splitmix64(seed) }
    }

    pub fn child(self, index: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    /// Seed value handed to a nested operation that takes a plain `u64`.
    pub fn seed(self) -> u64 {
        self.key
    }

    pub fn rng(self) -> SimRng {
        let mut bytes = [0u8; 32];
        for (i, chunk) in bytes.chunks_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix64(self.key.wrapping_add(i as u64)).to_le_bytes());
        }
        SimRng::from_seed(bytes)
    }
}

/// Generator for replicate `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> SimRng {
    Stream::new(seed).child(index).rng()
}
