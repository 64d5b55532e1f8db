//! Deterministic random streams.
//!
//! Every consumer draws from a ChaCha8 stream selected by `(seed, stream,
//! counter)`. ChaCha is counter based, so the draws for, e.g., iteration 17
//! of a run do not depend on how many numbers any other iteration consumed,
//! and parallel execution cannot perturb results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    ProblemNoise = 1,
    Concentration = 2,
    Scenario = 3,
}

// Words reserved per counter value inside a stream.
const WORDS_PER_COUNTER: u32 = 20;

pub fn derive_rng(seed: u64, stream: Stream, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng.set_word_pos((counter as u128) << WORDS_PER_COUNTER);
    rng
}

/// SplitMix64 finalizer, used to turn `(seed, counter)` into a child seed.
pub fn mix_seed(seed: u64, counter: u64) -> u64 {
    let mut z = seed ^ counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
