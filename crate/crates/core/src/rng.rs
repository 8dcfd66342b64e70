//! Counter-based random streams.
//!
//! Every shot draws from its own ChaCha stream keyed by `(seed, domain)` and
//! selected by the shot index, so results do not depend on how shots are
//! scheduled across worker threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain tags separating independent uses of one user seed.
pub mod domain {
    pub const SHOTS: u64 = 0x5348_4f54;
    pub const INSERTIONS: u64 = 0x494e_5352;
    pub const CIRCUIT: u64 = 0x4349_5243;
    pub const SYNDROMES: u64 = 0x5359_4e44;
    pub const PATCHES: u64 = 0x5041_5443;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0, 0)
    }

    /// Stream `index` of the family keyed by `(seed, domain)`.
    pub fn substream(seed: u64, domain: u64, index: u64) -> Self {
        let key = splitmix64(seed ^ splitmix64(domain));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        Self { rng }
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Draws an index from unnormalised non-negative weights summing to `total`.
    pub fn categorical(&mut self, weights: &[f64], total: f64) -> usize {
        let mut u = self.uniform() * total;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        // rounding: fall back to the last index with non-zero weight
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
