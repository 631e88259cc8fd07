//! Seeded random streams.
//!
//! Every stochastic routine takes a caller-supplied generator. Independent
//! streams for replicates, folds and chains come from [`stream`], which keys
//! a ChaCha8 generator on the master seed and selects a stream id from the
//! (index, stage) pair, so each stream can be rebuilt on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Purpose tag mixed into the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Stage {
    Data = 1,
    Fit = 2,
    Folds = 3,
    Bootstrap = 4,
    Chain = 5,
    Draws = 6,
}

/// Generator seeded by `seed` alone.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of stage `stage` under the master seed.
pub fn stream(seed: u64, index: u64, stage: Stage) -> Rng {
    assert!(index < 1 << 56, "stream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << 8) | stage as u64);
    rng
}
