//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit `u64` seed. Work items that may
//! run in parallel get their own ChaCha8 stream, selected by a stream id
//! derived from the item's coordinates, so results do not depend on how the
//! work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for stream `stream_id` under `seed`. Distinct ids give
/// non-overlapping ChaCha streams.
pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Stream id for a two-dimensional work grid (e.g. event x iteration).
pub fn grid_stream_id(row: u32, col: u32) -> u64 {
    (u64::from(row) << 32) | u64::from(col)
}

/// Position a stream at the start of block `block`. Each block spans 2^24
/// 32-bit words, far more than a single tournament consumes.
pub fn seek_block(rng: &mut SimRng, block: u64) {
    rng.set_word_pos(u128::from(block) << 24);
}
