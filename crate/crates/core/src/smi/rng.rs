//! Counter-based random streams.
//!
//! Every random draw in an ensemble comes from the ChaCha8 keystream keyed by
//! the master seed, with the trajectory index as the stream id and the slice
//! index selecting a disjoint `2^32`-word window of that stream. Any slice of
//! any trajectory can therefore be regenerated in isolation, in any order, on
//! any worker.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS_PER_SLICE_LOG2: u32 = 32;

/// Generator for slice `slice` of trajectory `trajectory`.
pub fn slice_rng(master_seed: u64, trajectory: u64, slice: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trajectory);
    rng.set_word_pos((slice as u128) << WORDS_PER_SLICE_LOG2);
    rng
}

/// Seed for sweep point `index`; index 0 maps to the master seed itself.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    master_seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
