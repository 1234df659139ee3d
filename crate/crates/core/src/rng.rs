//! Splittable, reproducible random streams.
//!
//! A [`RandomStream`] is a seed plus a path of split indices. The path is
//! hashed with SplitMix64 into a 256-bit ChaCha8 key, so identical
//! `(seed, path)` pairs reproduce identical draws and sibling paths give
//! independent generators. Streams are plain values and can be moved to
//! worker threads freely.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator handed out by [`RandomStream::rng`].
pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    seed: u64,
    path: Vec<u64>,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, path: Vec::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Child stream at split index `index`.
    pub fn split(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self { seed: self.seed, path }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut state = self.seed;
        let mut acc = splitmix64(&mut state);
        for (depth, &idx) in self.path.iter().enumerate() {
            // depth is mixed in so that [a, b] and [b, a] differ
            let mut s = idx ^ ((depth as u64 + 1).wrapping_mul(0xd6e8_feb8_6659_fd93));
            acc ^= splitmix64(&mut s);
            state ^= acc;
            acc = splitmix64(&mut state);
        }
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
