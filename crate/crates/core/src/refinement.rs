//! Distributions over refinement outcomes and the reflection checks.
//!
//! A [`RefinementModel`] describes what an agent expects to learn when it
//! splits an act currently valued `u0` with credence `p0`. The default
//! construction draws a split probability `q`, a spread `delta` and a
//! branch mass `s`, then sets
//!
//! ```text
//! u1 = u0 + (1 - q) * delta      p1 = q * s
//! u2 = u0 - q * delta            p2 = (1 - q) * s
//! ```
//!
//! so `q * u1 + (1 - q) * u2 == u0` holds for every draw. The
//! expectation-only mode uses the analytic mean of `q` in place of the draw,
//! which preserves `u0` only on average.

use alloc::vec::Vec;

use thiserror::Error;

use crate::dist::{DistError, DistSpec};
use crate::oracles::DiscreteOutcomeSpace;
use crate::stats::{Estimate, Executor, SubStream};

/// Minimum sample count for the statistical checks.
pub const MIN_CHECK_SAMPLES: usize = 1000;

/// `|u1 - u2|` above this counts as a genuine difference.
pub const DISTINCT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{field}: {source}")]
    Dist { field: &'static str, source: DistError },
    #[error("branch mass {0} outside (0, 1)")]
    DegenerateMass(f64),
    #[error("mass distribution has mean {mean}, expected p0 = {p0}")]
    MassMeanMismatch { mean: f64, p0: f64 },
    #[error("invalid model: {0}")]
    Invalid(&'static str),
    #[error("at least {MIN_CHECK_SAMPLES} samples required, got {0}")]
    TooFewSamples(usize),
}

/// `(u1, u2, p1, p2)`: utilities and credences of the two refined branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementOutcome {
    pub u1: f64,
    pub u2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl RefinementOutcome {
    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = self.u1.is_finite() && self.u2.is_finite();
        let mass = self.p1 + self.p2;
        if !finite {
            return Err(ModelError::Invalid("non-finite branch utility"));
        }
        if !(self.p1 > 0.0 && self.p2 > 0.0 && mass < 1.0) {
            return Err(ModelError::DegenerateMass(mass));
        }
        Ok(())
    }

    pub fn q(&self) -> ConditionalQ {
        ConditionalQ(self.p1 / (self.p1 + self.p2))
    }

    /// `q * u1 + (1 - q) * u2`, the post-refinement value of the whole act.
    pub fn reflected_value(&self) -> f64 {
        let q = self.q().0;
        q * self.u1 + (1.0 - q) * self.u2
    }

    pub fn is_distinct(&self) -> bool {
        (self.u1 - self.u2).abs() > DISTINCT_TOL
    }
}

/// Post-refinement credence of the first branch given the act.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ConditionalQ(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReflectionMode {
    /// Reflection holds draw by draw.
    #[default]
    PerSample,
    /// Reflection holds only in expectation.
    Expectation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementModel {
    pub u0: f64,
    pub p0: f64,
    pub q: DistSpec,
    pub spread: DistSpec,
    pub mass: DistSpec,
    pub mode: ReflectionMode,
    /// Added to `u1` after construction. Nonzero values break reflection and
    /// exist to exercise the checks.
    pub u1_bias: f64,
}

impl RefinementModel {
    /// Per-sample reflection with branch mass fixed at `p0`.
    pub fn new(u0: f64, p0: f64, q: DistSpec, spread: DistSpec) -> Self {
        Self { u0, p0, q, spread, mass: DistSpec::point(p0), mode: ReflectionMode::PerSample, u1_bias: 0.0 }
    }

    pub fn with_mass(mut self, mass: DistSpec) -> Self {
        self.mass = mass;
        self
    }

    pub fn with_mode(mut self, mode: ReflectionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.u1_bias = bias;
        self
    }

    /// Same distributions, re-anchored at another act's `(u0, p0)`. A
    /// point-mass `mass` moves with `p0`; other mass specs are kept.
    pub fn rebased(&self, u0: f64, p0: f64) -> Self {
        let mass = match self.mass {
            DistSpec::Point { .. } => DistSpec::point(p0),
            other => other,
        };
        Self { u0, p0, mass, ..*self }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.u0.is_finite() || !self.u1_bias.is_finite() {
            return Err(ModelError::Invalid("u0 and bias must be finite"));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(ModelError::Invalid("p0 must lie in (0, 1)"));
        }
        self.q.require_within(0.0, 1.0).map_err(|source| ModelError::Dist { field: "q", source })?;
        self.spread.validate().map_err(|source| ModelError::Dist { field: "spread", source })?;
        self.mass.require_within(0.0, 1.0).map_err(|source| ModelError::Dist { field: "mass", source })?;
        let mean = self.mass.mean();
        if (mean - self.p0).abs() > 1e-9 {
            return Err(ModelError::MassMeanMismatch { mean, p0: self.p0 });
        }
        Ok(())
    }

    fn construct(&self, q: f64, delta: f64, s: f64) -> Result<RefinementOutcome, ModelError> {
        if !(s > 0.0 && s < 1.0) {
            return Err(ModelError::DegenerateMass(s));
        }
        let anchor = match self.mode {
            ReflectionMode::PerSample => q,
            ReflectionMode::Expectation => self.q.mean(),
        };
        Ok(RefinementOutcome {
            u1: self.u0 + (1.0 - anchor) * delta + self.u1_bias,
            u2: self.u0 - anchor * delta,
            p1: q * s,
            p2: (1.0 - q) * s,
        })
    }

    /// Draws one outcome. Draw order is `q`, spread, mass.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<RefinementOutcome, ModelError> {
        let q = self.q.sample(rng).map_err(|source| ModelError::Dist { field: "q", source })?;
        let delta = self.spread.sample(rng).map_err(|source| ModelError::Dist { field: "spread", source })?;
        let s = self.mass.sample(rng).map_err(|source| ModelError::Dist { field: "mass", source })?;
        self.construct(q, delta, s)
    }

    /// All outcomes with their probabilities, when every component has
    /// finite support.
    pub fn outcome_space(&self) -> Option<DiscreteOutcomeSpace<RefinementOutcome>> {
        let qs = self.q.finite_support()?;
        let ds = self.spread.finite_support()?;
        let ss = self.mass.finite_support()?;
        let mut outcomes = Vec::with_capacity(qs.len() * ds.len() * ss.len());
        for &(pq, q) in &qs {
            for &(pd, d) in &ds {
                for &(ps, s) in &ss {
                    outcomes.push((pq * pd * ps, self.construct(q, d, s).ok()?));
                }
            }
        }
        DiscreteOutcomeSpace::new(outcomes).ok()
    }

    /// Whether the spread can be nonzero at all.
    pub fn is_degenerate(&self) -> bool {
        match self.spread.finite_support() {
            Some(atoms) => atoms.iter().all(|&(_, d)| d == 0.0),
            None => false,
        }
    }
}

/// Named reference models anchored at `(u0, p0)`, covering every
/// distribution family in both reflection modes. The last entry is the
/// degenerate model.
pub fn builtin_models(u0: f64, p0: f64) -> Vec<(&'static str, RefinementModel)> {
    let half = DistSpec::point(0.5);
    let jitter = 0.2 * p0.min(1.0 - p0);
    let base = |q, spread| RefinementModel::new(u0, p0, q, spread);
    alloc::vec![
        ("two-point-2", base(half, DistSpec::pm(2.0))),
        ("two-point-0.5", base(half, DistSpec::pm(0.5))),
        ("two-point-skewed", base(half, DistSpec::TwoPoint { center: 0.0, offset: 1.0, prob: 0.3 })),
        ("uniform-1", base(half, DistSpec::uniform(-1.0, 1.0))),
        ("uniform-offset", base(half, DistSpec::uniform(0.5, 3.0))),
        ("gaussian-1", base(half, DistSpec::gaussian(0.0, 1.0))),
        ("gaussian-truncated", base(half, DistSpec::Gaussian { mean: 0.0, sd: 2.0, lo: -1.0, hi: 1.0 })),
        ("random-q-two-point", base(DistSpec::uniform(0.1, 0.9), DistSpec::pm(1.0))),
        ("random-q-gaussian", base(DistSpec::TwoPoint { center: 0.5, offset: 0.3, prob: 0.5 }, DistSpec::gaussian(0.0, 0.5))),
        (
            "random-mass",
            base(half, DistSpec::pm(1.0)).with_mass(DistSpec::TwoPoint { center: p0, offset: jitter, prob: 0.5 }),
        ),
        (
            "uniform-mass",
            base(DistSpec::uniform(0.2, 0.8), DistSpec::uniform(-2.0, 2.0))
                .with_mass(DistSpec::uniform(p0 - jitter, p0 + jitter)),
        ),
        ("expectation-mode", base(DistSpec::uniform(0.2, 0.8), DistSpec::pm(1.5)).with_mode(ReflectionMode::Expectation)),
        ("degenerate", base(half, DistSpec::point(0.0))),
    ]
}

/// Outcome number `index` of the stream.
pub fn sample_outcome(model: &RefinementModel, stream: SubStream, index: u64) -> Result<RefinementOutcome, ModelError> {
    model.sample(&mut stream.rng(index))
}

/// Draws `n` outcomes in index order.
pub fn sample_outcomes<E: Executor>(
    model: &RefinementModel,
    n: usize,
    stream: SubStream,
    exec: &E,
) -> Result<Vec<RefinementOutcome>, ModelError> {
    model.validate()?;
    exec.map(n, |i| sample_outcome(model, stream, i as u64)).into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrpReport {
    /// Sample mean of `q * u1 + (1 - q) * u2`.
    pub value: Estimate,
    /// Sample mean of `p1 + p2`.
    pub mass: Estimate,
    pub value_ok: bool,
    pub mass_ok: bool,
    pub pass: bool,
}

/// Monte Carlo check of reflection: the mean post-refinement value must sit
/// within 4 standard errors of `u0`, and the mean branch mass within 4
/// standard errors of `p0`. A rounding slack of `1e-12 * max(1, |x|)` is
/// allowed so that exact models with zero variance still pass.
pub fn check_rrp<E: Executor>(
    model: &RefinementModel,
    n: usize,
    stream: SubStream,
    exec: &E,
) -> Result<RrpReport, ModelError> {
    if n < MIN_CHECK_SAMPLES {
        return Err(ModelError::TooFewSamples(n));
    }
    let outcomes = sample_outcomes(model, n, stream, exec)?;
    let values: Vec<f64> = outcomes.iter().map(RefinementOutcome::reflected_value).collect();
    let masses: Vec<f64> = outcomes.iter().map(|o| o.p1 + o.p2).collect();
    let value = Estimate::from_samples(&values);
    let mass = Estimate::from_samples(&masses);
    let value_ok = value.agrees_with(model.u0, 4.0, 1e-12 * model.u0.abs().max(1.0));
    let mass_ok = mass.agrees_with(model.p0, 4.0, 1e-12);
    Ok(RrpReport { value, mass, value_ok, mass_ok, pass: value_ok && mass_ok })
}

/// Fraction of draws with `|u1 - u2| > 1e-12`.
pub fn check_uncertainty<E: Executor>(
    model: &RefinementModel,
    n: usize,
    stream: SubStream,
    exec: &E,
) -> Result<f64, ModelError> {
    if n < MIN_CHECK_SAMPLES {
        return Err(ModelError::TooFewSamples(n));
    }
    let outcomes = sample_outcomes(model, n, stream, exec)?;
    Ok(outcomes.iter().filter(|o| o.is_distinct()).count() as f64 / n as f64)
}
