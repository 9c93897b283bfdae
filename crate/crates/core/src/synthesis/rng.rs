//! Counter-based random streams.
//!
//! Every random quantity is addressed by `(master seed, sample index, wave
//! vector, component)`. The address is hashed into a 64-bit key and draws are
//! `mix(key + counter·γ)`, so a mode's value in a given sample is the same
//! whatever order, thread, or lattice size it is generated under.

use rand::{Error as RandError, RngCore};

use crate::spectral::WaveVector;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a stream is used for; distinct components never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Component {
    VelocityE = 1,
    VelocityF = 2,
    Source = 3,
    PhaseDriftE = 4,
    PhaseDriftF = 5,
    TelegraphE = 6,
    TelegraphF = 7,
    Bootstrap = 8,
    Generic = 9,
}

/// The `(seed, sample)` part of a stream address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub sample: u64,
}

impl StreamKey {
    pub fn new(seed: u64, sample: u64) -> Self {
        StreamKey { seed, sample }
    }

    fn base(&self) -> u64 {
        mix64(mix64(self.seed ^ 0x5851_F42D_4C95_7F2D).wrapping_add(self.sample.wrapping_mul(GOLDEN)))
    }

    /// Stream for one wave vector and component.
    pub fn mode(&self, k: WaveVector, component: Component) -> CounterRng {
        let packed = ((k.kx as u32 as u64) << 42) ^ ((k.ky as u32 as u64) << 21) ^ (k.kz as u32 as u64);
        let h = mix64(self.base() ^ mix64(packed.wrapping_add(0xD6E8_FEB8_6659_FD93)));
        CounterRng::from_key(mix64(h ^ (component as u64).wrapping_mul(GOLDEN)))
    }

    /// Stream not tied to a mode (bootstrap resampling and the like).
    pub fn stream(&self, component: Component, index: u64) -> CounterRng {
        let h = mix64(self.base() ^ mix64(index ^ 0xA076_1D64_78BD_642F));
        CounterRng::from_key(mix64(h ^ (component as u64).wrapping_mul(GOLDEN)))
    }
}

/// A SplitMix-style counter generator: output `i` is `mix(key + i·γ)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn from_key(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    /// Uniform draw on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Deterministic seed-independent hash of a wave vector onto `[0, 1)`.
pub fn mode_hash_unit(k: WaveVector) -> f64 {
    let packed = ((k.kx as u32 as u64) << 42) ^ ((k.ky as u32 as u64) << 21) ^ (k.kz as u32 as u64);
    (mix64(mix64(packed ^ 0x2545_F491_4F6C_DD1D)) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
