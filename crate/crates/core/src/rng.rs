//! Seed splitting.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by the
//! user seed, with the 64-bit ChaCha stream id encoding what is drawn
//! (top byte) and which replicate or trial it belongs to (low 56 bits).
//! A replicate therefore depends only on `(seed, purpose, index)`, which
//! makes serial and parallel runs agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Stream {
    /// Scenario data generation.
    Data = 0,
    /// Multiplier row `j`.
    Multiplier = 1,
    /// Uniform reference sample `j` of the simulation method.
    Uniform = 2,
}

const INDEX_MASK: u64 = (1 << 56) - 1;

pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    debug_assert!(index <= INDEX_MASK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 56) | (index & INDEX_MASK));
    rng
}

/// Seed of Monte Carlo trial `r`: the base seed XOR the trial index.
pub fn trial_seed(base: u64, r: u64) -> u64 {
    base ^ r
}
