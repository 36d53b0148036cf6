//! Seeded RNG streams.
//!
//! Every random quantity in the crate is derived from a recorded 64-bit seed
//! plus a stream index, so that runs are byte-reproducible and independent
//! streams can be handed to parallel workers. Stream derivation mixes
//! `(seed, stream)` through SplitMix64 before seeding a ChaCha8 generator;
//! ChaCha8 is used because its output is stable across `rand` releases.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

/// A reproducible RNG handle: a recorded seed plus a stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, stream: 0 }
    }

    /// Derive an independent substream. Substream indices form a tree:
    /// `with_stream` mixes the parent stream so `(a).with_stream(i)` and
    /// `(b).with_stream(j)` collide only if the SplitMix64 outputs collide.
    pub fn with_stream(self, stream: u64) -> Self {
        RngStream { seed: self.seed, stream: splitmix64(self.stream ^ splitmix64(stream)) }
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(splitmix64(self.seed) ^ splitmix64(self.stream.wrapping_add(0x9E37_79B9_7F4A_7C15)))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
