//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by `(master_seed, domain)` and
//! positioned on stream number `stream`. Replicate `b` of a bootstrap run
//! therefore draws from a stream that depends only on the master seed and
//! `b`, so any replicate can be regenerated alone and results do not depend
//! on the order in which worker threads pick up replicates.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream domains keep the weight draws, prediction simulations and test
/// simulations of one master seed from overlapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Weights,
    Prediction,
    Simulation,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Weights => 0x5745_4947_4854_5331,
            Domain::Prediction => 0x5052_4544_4943_5431,
            Domain::Simulation => 0x5349_4d55_4c41_5431,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(master_seed: u64, domain: Domain, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ domain.tag()));
        inner.set_stream(stream);
        Self { inner }
    }

    /// Stream for bootstrap replicate `b`.
    pub fn replicate(master_seed: u64, b: u64) -> Self {
        Self::new(master_seed, Domain::Weights, b)
    }

    /// Uniform draw on the open interval (0, 1), 53-bit resolution.
    pub fn uniform_open(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    /// Unit-mean exponential by inversion; always strictly positive.
    pub fn exp1(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    /// Uniform index in `0..n` (n > 0), unbiased by rejection.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n) - 1;
        loop {
            let x = self.inner.next_u64();
            if x <= zone {
                return (x % n) as usize;
            }
        }
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
