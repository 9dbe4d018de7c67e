//! Counter-based uniforms keyed by (seed, period, draw index).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Draw index of the consumer-choice uniform.
pub const CHOICE_DRAW: u32 = 0;
/// Draw index of the stochastic usage-duration uniform.
pub const DURATION_DRAW: u32 = 1;

/// Uniform on [0,1) with 53 random bits. Independent of call order.
pub fn uniform(seed: u64, period: usize, draw: u32) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(period as u64);
    rng.set_word_pos(2 * draw as u128);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
