//! Counter-based random streams keyed by `(seed, j, k)`.
//!
//! Every wavelet coefficient owns a ChaCha8 stream selected by its heap index
//! `2^j + k`, so any coefficient can be regenerated in isolation and the
//! result does not depend on the order or thread in which coefficients are
//! drawn. Successive draws for one coefficient advance the stream's counter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CoefficientStreams {
    base: ChaCha8Rng,
}

impl CoefficientStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for coefficient `(j, k)`, positioned at its first draw.
    pub fn stream(&self, j: usize, k: usize) -> ChaCha8Rng {
        debug_assert!(j < 63 && k < (1usize << j));
        let mut rng = self.base.clone();
        rng.set_stream((1u64 << j) + k as u64);
        rng.set_word_pos(0);
        rng
    }
}
