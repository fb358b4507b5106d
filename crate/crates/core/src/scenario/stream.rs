use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::DenseVector;

/// Uniform sample in `[0, 1)` from the top 53 bits of a 64-bit draw.
pub fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seeded stream of disturbance vectors drawn uniformly from a box.
#[derive(Debug, Clone)]
pub struct DisturbanceStream {
    rng: ChaCha8Rng,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DisturbanceStream {
    pub fn new(seed: u64, lo: &[f64], hi: &[f64]) -> Self {
        DisturbanceStream { rng: ChaCha8Rng::seed_from_u64(seed), lo: lo.to_vec(), hi: hi.to_vec() }
    }

    pub fn next_sample(&mut self) -> DenseVector {
        let d = self.lo.len();
        let mut w = DenseVector::zeros(d);
        for i in 0..d {
            w[i] = self.lo[i] + (self.hi[i] - self.lo[i]) * unit_uniform(&mut self.rng);
        }
        w
    }

    pub fn take(&mut self, n: usize) -> Vec<DenseVector> {
        (0..n).map(|_| self.next_sample()).collect()
    }
}
