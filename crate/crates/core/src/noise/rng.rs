//! Seekable random streams.
//!
//! Every draw is a pure function of `(master_seed, stream_id, index)`: the stream
//! id selects the ChaCha nonce and the index selects the word position, so trials
//! can run in any order on any number of workers.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Role of a stream within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Multiplicative noise `xi`.
    Xi = 0,
    /// Additive walk noise `zeta`.
    Zeta = 1,
    /// Step-size jitter `chi`.
    Chi = 2,
    /// Initial condition draws and anything else a trial needs.
    Aux = 3,
}

/// Stream id for `role` within trial `trial_id`.
pub fn trial_stream(trial_id: u64, role: Role) -> u64 {
    trial_id.wrapping_mul(4).wrapping_add(role as u64)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self { master_seed, stream_id, index: 0, rng }
    }

    pub fn for_trial(master_seed: u64, trial_id: u64, role: Role) -> Self {
        Self::new(master_seed, trial_stream(trial_id, role))
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Index of the next draw.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Moves to draw number `index`.
    pub fn seek(&mut self, index: u64) {
        self.rng.set_word_pos(2 * u128::from(index));
        self.index = index;
    }

    pub fn next_u64(&mut self) -> u64 {
        self.index += 1;
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        unit_from_bits(self.next_u64())
    }

    /// Draw `index` without disturbing the current position.
    pub fn u64_at(&self, index: u64) -> u64 {
        let mut probe = self.rng.clone();
        probe.set_word_pos(2 * u128::from(index));
        probe.next_u64()
    }
}

pub(crate) fn unit_from_bits(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
