//! Seeded Gaussian noise.
//!
//! Streams come from ChaCha20 (RFC 7539 block function, 20 rounds) as
//! exposed by `rand_chacha::ChaCha20Rng`:
//!
//! * key: the 64-bit seed as 8 little-endian bytes followed by 24 zero bytes,
//! * stream id: the chain index (`set_stream`), word position 0,
//! * `u64` draws: two consecutive 32-bit output words, low word first.
//!
//! Each standard normal consumes two `u64` draws `a`, `b` and uses the cosine
//! branch of Box-Muller with `u1 = 1 - (a >> 11) * 2^-53` (in `(0, 1]`) and
//! `u2 = (b >> 11) * 2^-53`: `sqrt(-2 ln u1) * cos(2 pi u2)`.
//!
//! Chain `k` of a run seeded with `s` is therefore reproducible from `(s, k)`
//! alone, independent of how many other chains run or in what order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub struct NoiseStream {
    rng: ChaCha20Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, chain: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(chain);
        Self { rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn next_normal(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        let u1 = 1.0 - (a >> 11) as f64 * SCALE;
        let u2 = (b >> 11) as f64 * SCALE;
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }
}
