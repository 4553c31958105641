//! Counter-based seed derivation.
//!
//! Frame `k` of a run draws from `child_seed(master, k)`: the first word of a
//! ChaCha8 stream keyed by the master seed and selected by the frame index.
//! The mapping depends only on `(master, k)`, so an ensemble is the same no
//! matter which worker produces which frame.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream selector used for per-frame seeds.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Generator for a single consumer of a derived seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
