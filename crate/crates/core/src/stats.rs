//! Random sub-streams, sample executors and Monte Carlo summaries.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream addressed by `(seed, domain, index)`.
///
/// The seed and domain pick a ChaCha key; the index picks the ChaCha stream
/// under that key. Sample `i` of an estimator always reads stream `i`, no
/// matter which worker evaluates it or in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubStream {
    pub seed: u64,
    pub domain: u64,
}

impl SubStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, domain: 0 }
    }

    /// A child stream family, e.g. one per stage of a refinement chain.
    pub fn child(self, tag: u64) -> Self {
        Self { seed: self.seed, domain: splitmix(self.domain ^ splitmix(tag.wrapping_add(0x5851_f42d_4c95_7f2d))) }
    }

    pub fn rng(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.seed) ^ self.domain);
        rng.set_stream(index);
        rng
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Evaluates `f(0..n)` and returns the results in index order.
///
/// Implementations may run the closure on several threads; they must not
/// reorder the output.
pub trait Executor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Pairwise summation over a fixed binary tree (split at `len / 2`).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().fold(0.0, |acc, x| acc + x);
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// An exactly known value (zero standard error).
    pub fn exact(value: f64) -> Self {
        Self { mean: value, std_error: 0.0, n: 0 }
    }

    /// Mean and standard error (unbiased variance) of `xs`. Empty input gives NaN.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = pairwise_sum(xs) / n as f64;
        if n < 2 {
            return Self { mean, std_error: 0.0, n };
        }
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        Self { mean, std_error: libm::sqrt(var / n as f64), n }
    }

    /// Whether `value` lies within `k` standard errors of the mean (plus `slack`).
    pub fn agrees_with(&self, value: f64, k: f64, slack: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + slack
    }

    /// Two-sided normal confidence interval half-width for `z`.
    pub fn half_width(&self, z: f64) -> f64 {
        z * self.std_error
    }
}

/// z quantile for a two-sided 99% interval.
pub const Z99: f64 = 2.575_829_303_548_901;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_addressed_not_sequenced() {
        let s = SubStream::new(7);
        let a: f64 = s.rng(3).random();
        let _: f64 = s.rng(2).random();
        let b: f64 = s.rng(3).random();
        assert_eq!(a.to_bits(), b.to_bits());
        let c: f64 = s.rng(4).random();
        assert_ne!(a, c);
        let d: f64 = s.child(1).rng(3).random();
        assert_ne!(a, d);
    }

    #[test]
    fn pairwise_matches_exact_small_sums() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn estimate_of_two_points() {
        // values {0, 2}: mean 1, unbiased variance 2, se = sqrt(2/2) = 1
        let e = Estimate::from_samples(&[0.0, 2.0]);
        assert_eq!(e.mean, 1.0);
        assert!((e.std_error - 1.0).abs() < 1e-15);
    }
}
