use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Matrix;
use crate::error::{Error, Result};

/// Seeded random source. ChaCha8 keeps the stream identical across platforms.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Child generator for an independent stream identified by `tags`.
    pub fn derive(root: u64, tags: &[u64]) -> Self {
        Self::new(derive_seed(root, tags))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One draw from `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    pub fn uniform(&mut self, low: f64, high: f64, rows: usize, cols: usize) -> Result<Matrix> {
        if !(low < high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::invalid(
                "uniform range",
                format!("need finite low < high, got [{low}, {high})"),
            ));
        }
        let width = high - low;
        Ok(Matrix::from_fn(rows, cols, |_, _| {
            // low + u * width can round up to `high` for u close to 1.
            let v = low + self.next_f64() * width;
            if v < high {
                v
            } else {
                low
            }
        }))
    }

    pub fn bernoulli(&mut self, p: f64, rows: usize, cols: usize) -> Result<Matrix> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(
                "probability",
                format!("must lie in [0, 1], got {p}"),
            ));
        }
        Ok(Matrix::from_fn(rows, cols, |_, _| {
            if self.next_f64() < p {
                1.0
            } else {
                0.0
            }
        }))
    }

    /// Xavier-uniform weights of shape `fan_in x fan_out`.
    pub fn xavier(&mut self, fan_in: usize, fan_out: usize) -> Result<Matrix> {
        if fan_in == 0 || fan_out == 0 {
            return Err(Error::invalid(
                "fan dimensions",
                format!("must be positive, got {fan_in}x{fan_out}"),
            ));
        }
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        self.uniform(-limit, limit, fan_in, fan_out)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed splitting rule: `s = splitmix(root)`, then `s = splitmix(s ^ tag)` per tag.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(root), |acc, &tag| splitmix64(acc ^ tag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_edge_probabilities() {
        let mut rng = Rng::new(1);
        assert!(rng.bernoulli(1.0, 10, 10).unwrap().as_slice().iter().all(|&v| v == 1.0));
        assert!(rng.bernoulli(0.0, 10, 10).unwrap().as_slice().iter().all(|&v| v == 0.0));
        assert!(rng.bernoulli(1.5, 1, 1).is_err());
        assert!(rng.bernoulli(-0.1, 1, 1).is_err());
    }

    #[test]
    fn bernoulli_mean_concentrates() {
        let mut rng = Rng::new(2024);
        let draws = rng.bernoulli(0.8, 1000, 100).unwrap();
        let mean = draws.as_slice().iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.8).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn same_seed_same_draws() {
        let a = Rng::new(7).uniform(-1.0, 3.0, 20, 5).unwrap();
        let b = Rng::new(7).uniform(-1.0, 3.0, 20, 5).unwrap();
        assert_eq!(a, b);
        let c = Rng::new(8).uniform(-1.0, 3.0, 20, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_stays_in_half_open_range() {
        let m = Rng::new(3).uniform(0.0, 0.01, 200, 50).unwrap();
        assert!(m.as_slice().iter().all(|&v| (0.0..0.01).contains(&v)));
        assert!(Rng::new(3).uniform(1.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn xavier_bound() {
        let w = Rng::new(5).xavier(30, 90).unwrap();
        let limit = (6.0f64 / 120.0).sqrt();
        assert_eq!(w.shape(), (30, 90));
        assert!(w.as_slice().iter().all(|v| v.abs() <= limit));
        assert!(Rng::new(5).xavier(0, 3).is_err());
    }

    #[test]
    fn derived_streams_differ() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(9, &[4, 2]), derive_seed(9, &[4, 2]));
    }
}
