//! Counter-based random streams.
//!
//! Every draw in a run comes from a ChaCha8 stream addressed by
//! (seed, purpose, iteration, task). Tasks own disjoint regions of the
//! keystream, so results do not depend on how tasks are scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; part of its address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Init = 1,
    Tau = 2,
    Coef = 3,
    Omega = 4,
    E = 5,
    Batch = 6,
    Accept = 7,
    Simulate = 8,
    Test = 9,
}

/// Words of keystream reserved per task.
const TASK_SPAN_BITS: u32 = 40;

#[derive(Debug, Clone)]
pub struct Streams {
    key: [u8; 32],
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key }
    }

    /// The stream for one task of one iteration.
    pub fn stream(&self, purpose: Purpose, iteration: u64, task: u64) -> ChaCha8Rng {
        debug_assert!(iteration < 1 << 56 && task < 1 << (128 - TASK_SPAN_BITS - 64));
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(((purpose as u64) << 56) | iteration);
        rng.set_word_pos(u128::from(task) << TASK_SPAN_BITS);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
