//! The closed vocabulary of scalar distributions used by refinement models.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(&'static str),
    #[error("truncated gaussian rejected {0} consecutive draws")]
    TruncationTooNarrow(usize),
    #[error("distribution support leaves the interval ({lo}, {hi})")]
    OutsideDomain { lo: f64, hi: f64 },
}

const MAX_REJECTIONS: usize = 10_000;

/// A scalar distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    Point { value: f64 },
    /// `center + offset` with probability `prob`, otherwise `center - offset`.
    TwoPoint { center: f64, offset: f64, prob: f64 },
    /// Open interval `(lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Normal(mean, sd) conditioned on `(lo, hi)`; bounds may be infinite.
    Gaussian { mean: f64, sd: f64, lo: f64, hi: f64 },
}

impl DistSpec {
    pub fn point(value: f64) -> Self {
        Self::Point { value }
    }

    /// Symmetric two-point `±offset` with equal probability.
    pub fn pm(offset: f64) -> Self {
        Self::TwoPoint { center: 0.0, offset, prob: 0.5 }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::Uniform { lo, hi }
    }

    pub fn gaussian(mean: f64, sd: f64) -> Self {
        Self::Gaussian { mean, sd, lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        let ok = match *self {
            Self::Point { value } => value.is_finite(),
            Self::TwoPoint { center, offset, prob } => {
                center.is_finite() && offset.is_finite() && offset >= 0.0 && (0.0..=1.0).contains(&prob)
            }
            Self::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Self::Gaussian { mean, sd, lo, hi } => {
                mean.is_finite() && sd.is_finite() && sd >= 0.0 && lo < hi && !lo.is_nan() && !hi.is_nan()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(DistError::InvalidParameters(self.kind()))
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Point { .. } => "point",
            Self::TwoPoint { .. } => "two-point",
            Self::Uniform { .. } => "uniform",
            Self::Gaussian { .. } => "gaussian",
        }
    }

    /// Checks that every possible draw lies strictly inside `(lo, hi)`.
    pub fn require_within(&self, lo: f64, hi: f64) -> Result<(), DistError> {
        self.validate()?;
        let inside = |x: f64| x > lo && x < hi;
        let ok = match *self {
            Self::Point { value } => inside(value),
            Self::TwoPoint { center, offset, prob } => {
                (prob == 0.0 || inside(center + offset)) && (prob == 1.0 || inside(center - offset))
            }
            Self::Uniform { lo: a, hi: b } => a >= lo && b <= hi,
            Self::Gaussian { mean, sd, lo: a, hi: b } => {
                if sd == 0.0 {
                    inside(mean)
                } else {
                    a >= lo && b <= hi
                }
            }
        };
        if ok {
            Ok(())
        } else {
            Err(DistError::OutsideDomain { lo, hi })
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, DistError> {
        match *self {
            Self::Point { value } => Ok(value),
            Self::TwoPoint { center, offset, prob } => {
                let u: f64 = rng.random();
                Ok(if u < prob { center + offset } else { center - offset })
            }
            Self::Uniform { lo, hi } => {
                let u: f64 = rng.sample(Open01);
                Ok(lo + (hi - lo) * u)
            }
            Self::Gaussian { mean, sd, lo, hi } => {
                if sd == 0.0 {
                    return Ok(mean);
                }
                let normal = Normal::new(mean, sd).map_err(|_| DistError::InvalidParameters("gaussian"))?;
                for _ in 0..MAX_REJECTIONS {
                    let x = normal.sample(rng);
                    if x > lo && x < hi {
                        return Ok(x);
                    }
                }
                Err(DistError::TruncationTooNarrow(MAX_REJECTIONS))
            }
        }
    }

    /// Analytic mean.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Point { value } => value,
            Self::TwoPoint { center, offset, prob } => center + offset * (2.0 * prob - 1.0),
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Gaussian { mean, sd, lo, hi } => {
                if sd == 0.0 {
                    return mean;
                }
                let a = (lo - mean) / sd;
                let b = (hi - mean) / sd;
                let mass = std_normal_cdf(b) - std_normal_cdf(a);
                mean + sd * (std_normal_pdf(a) - std_normal_pdf(b)) / mass
            }
        }
    }

    /// Atoms `(probability, value)` for finite-support distributions.
    pub fn finite_support(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            Self::Point { value } => Some(vec![(1.0, value)]),
            Self::Gaussian { mean, sd: 0.0, .. } => Some(vec![(1.0, mean)]),
            Self::TwoPoint { center, offset, prob } => {
                let atoms = [(prob, center + offset), (1.0 - prob, center - offset)];
                Some(atoms.into_iter().filter(|(p, _)| *p > 0.0).collect())
            }
            _ => None,
        }
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI)
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{Estimate, SubStream};

    #[test]
    fn two_point_mean_and_support() {
        let d = DistSpec::TwoPoint { center: 1.0, offset: 2.0, prob: 0.25 };
        assert_eq!(d.mean(), 0.0);
        assert_eq!(d.finite_support().unwrap(), vec![(0.25, 3.0), (0.75, -1.0)]);
    }

    #[test]
    fn truncated_gaussian_mean_matches_sampling() {
        let d = DistSpec::Gaussian { mean: 0.0, sd: 1.0, lo: 0.0, hi: f64::INFINITY };
        // half-normal mean sqrt(2/pi)
        assert!((d.mean() - libm::sqrt(2.0 / core::f64::consts::PI)).abs() < 1e-12);
        let s = SubStream::new(11);
        let xs: Vec<f64> = (0..20_000).map(|i| d.sample(&mut s.rng(i)).unwrap()).collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        assert!(Estimate::from_samples(&xs).agrees_with(d.mean(), 4.0, 0.0));
    }

    #[test]
    fn domain_checks() {
        assert!(DistSpec::uniform(0.0, 1.0).require_within(0.0, 1.0).is_ok());
        assert!(DistSpec::point(1.0).require_within(0.0, 1.0).is_err());
        assert!(DistSpec::pm(0.5).require_within(0.0, 1.0).is_err());
        assert!(DistSpec::TwoPoint { center: 0.5, offset: 0.25, prob: 0.5 }.require_within(0.0, 1.0).is_ok());
        assert!(DistSpec::uniform(1.0, 1.0).validate().is_err());
    }

    #[test]
    fn narrow_truncation_is_reported() {
        let d = DistSpec::Gaussian { mean: 0.0, sd: 1.0, lo: 50.0, hi: 51.0 };
        let err = d.sample(&mut SubStream::new(1).rng(0)).unwrap_err();
        assert_eq!(err, DistError::TruncationTooNarrow(MAX_REJECTIONS));
    }
}
