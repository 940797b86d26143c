//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(seed, stream id, word offset)`. A stream id combines a purpose tag with
//! a user index; the word offset is derived from the slot or sample index.
//! Any block of draws can therefore be regenerated independently, which keeps
//! parallel sampling reproducible for any thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream tags.
pub(crate) const TAG_STATES: u64 = 1;
pub(crate) const TAG_PROFILE: u64 = 2;

/// Words consumed by one `unit_f64` draw.
const WORDS_PER_DRAW: u128 = 2;

pub(crate) fn stream_id(tag: u64, index: usize) -> u64 {
    (tag << 40) | index as u64
}

/// Generator positioned at draw number `draw` of stream `stream`.
pub(crate) fn positioned(seed: u64, stream: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(draw as u128 * WORDS_PER_DRAW);
    rng
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub(crate) fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF lookup: index of the first cumulative weight exceeding `u`.
pub(crate) fn pick(cumulative: &[f64], u: f64) -> usize {
    let idx = cumulative.partition_point(|&c| c <= u);
    idx.min(cumulative.len() - 1)
}
