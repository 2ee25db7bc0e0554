//! Counter-addressed random streams.
//!
//! A stream is identified by `(seed, id)`. The master seed keys a ChaCha8
//! generator and the id selects its 64-bit stream, so replication `i` of a
//! run always sees the same draws no matter which worker executes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed out by [`RngStream`].
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub id: u64,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        Self { seed, id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.id);
        rng
    }
}
