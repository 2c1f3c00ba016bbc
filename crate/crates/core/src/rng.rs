//! Counter-style random streams.
//!
//! Every draw is addressed by `(run seed, step, purpose, lineage id)`: the
//! first three select a ChaCha8 key and the lineage id selects the stream
//! within that key. A particle's numbers therefore never depend on how
//! particles are scheduled across threads, and copies produced by branching
//! get fresh lineage ids derived from their parent.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a keyed stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Evolve = 0x45564f4c,
    Resample = 0x52455341,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// The ChaCha key shared by all particles for one `(seed, step, purpose)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepKey([u8; 32]);

impl StepKey {
    pub fn new(seed: u64, step: usize, purpose: Purpose) -> Self {
        let mut state = mix(mix(seed, step as u64), purpose as u64);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        StepKey(key)
    }

    /// Stream for one lineage under this key.
    #[inline]
    pub fn stream(&self, lineage: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(lineage);
        rng
    }
}

/// Lineage id of the `ordinal`-th copy made from `parent` at `step`.
#[inline]
pub fn child_lineage(parent: u64, step: usize, ordinal: usize) -> u64 {
    mix(mix(parent, step as u64 ^ 0xb7e1_5162_8aed_2a6b), ordinal as u64)
}

/// Seed of one independent repetition of an experiment.
pub fn repetition_seed(seed: u64, repetition: usize) -> u64 {
    mix(seed, 0x5245_5045_0000_0000 ^ repetition as u64)
}
