//! Counter-addressable random streams.
//!
//! Every draw is addressed by `(seed, stream, index)`. The generator is
//! ChaCha8 keyed by the seed; `stream` selects the ChaCha stream id and
//! `index` the block position, so any sub-range of a sequence can be
//! regenerated independently and in any order. Each index owns exactly
//! [`WORDS_PER_INDEX`] 32-bit words, i.e. two uniforms.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORDS_PER_INDEX: u128 = 4;

/// Streams are laid out as `realization * STREAMS_PER_REALIZATION + component`.
pub const STREAMS_PER_REALIZATION: u64 = 4;

/// Positioned uniform source for one `(seed, stream)` pair.
pub struct IndexedStream {
    rng: ChaCha8Rng,
}

impl IndexedStream {
    pub fn new(seed: u64, stream: u64, start_index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(start_index as u128 * WORDS_PER_INDEX);
        IndexedStream { rng }
    }

    /// The two uniforms in `[0, 1)` belonging to the next index.
    #[inline]
    pub fn next_pair(&mut self) -> (f64, f64) {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        (to_unit(a), to_unit(b))
    }
}

#[inline]
fn to_unit(bits: u64) -> f64 {
    // 53 high bits -> [0, 1)
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn stream_id(realization: u64, component: u64) -> u64 {
    realization * STREAMS_PER_REALIZATION + component
}
