//! Seed splitting for reproducible parallel Monte Carlo.
//!
//! Every work item (a trial or a frame) gets its own ChaCha8 stream: the key
//! is derived from the master seed and the 64-bit stream id is the item index.
//! Results therefore depend only on `(seed, index)` and never on how items are
//! scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for work item `index` under master `seed`.
pub fn stream_rng(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Generator for campaign-level draws (such as the interleaver) that must not
/// collide with any per-item stream.
pub fn campaign_rng(seed: u64, purpose: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(purpose);
    rng
}
