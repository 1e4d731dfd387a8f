//! Nash bargaining over a divisible resource, before and after the resource
//! is split into two separately allocable dimensions.
//!
//! Before refinement agent 1 receives `x` and agent 2 `1 - x` of one good
//! valued by the bundled `u = (v1 + v2) / 2`. After refinement the agents
//! split each dimension separately and agent `i` values the allocation
//! `w[i][0] * v1(.) + w[i][1] * v2(.)`, with `w[i][0] + w[i][1] = 1`.
//!
//! The solver is coordinate ascent on the Nash product, started from the
//! first-order point. Each coordinate step bisects on the sign of the
//! product's derivative inside the feasible interval, which keeps symmetric
//! and corner optima exact.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::stats::{Estimate, Executor, SubStream};

/// Successive payoffs closer than this end the coordinate ascent.
pub const CONVERGENCE_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 10_000;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BargainingError {
    #[error("invalid value function: {0}")]
    InvalidValueFunction(&'static str),
    #[error("invalid weight model: {0}")]
    InvalidWeights(&'static str),
    #[error("disagreement point must be symmetric, got ({0}, {1})")]
    AsymmetricDisagreement(f64, f64),
    #[error("no feasible allocation strictly improves on the disagreement point")]
    InfeasibleDisagreement,
    #[error("exhaustive evaluation needs the two-point weight model")]
    ExhaustiveUnavailable,
    #[error("correlation grid must be sorted ascending within [-1, 1]")]
    UnsortedSweep,
    #[error("sample count must be positive")]
    NoSamples,
}

/// Something that can be bargained over on `[0, 1]`.
pub trait Valuation {
    fn value(&self, x: f64) -> f64;
    /// Right derivative (left derivative at 1).
    fn slope(&self, x: f64) -> f64;
}

/// Value of a share of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueFunction {
    /// `x^a` with `a` in `(0, 1]`.
    Power { exponent: f64 },
    Linear,
    /// Piecewise-linear interpolation through `(x, y)` knots from `(0, 0)` to `x = 1`.
    Grid { knots: Vec<(f64, f64)> },
}

impl ValueFunction {
    pub fn sqrt() -> Self {
        Self::Power { exponent: 0.5 }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Power { .. } => "power",
            Self::Linear => "linear",
            Self::Grid { .. } => "custom-grid",
        }
    }

    pub fn validate(&self) -> Result<(), BargainingError> {
        match self {
            Self::Power { exponent } if !(*exponent > 0.0 && *exponent <= 1.0) => {
                Err(BargainingError::InvalidValueFunction("power exponent must lie in (0, 1]"))
            }
            Self::Grid { knots } => {
                let bad = |m| Err(BargainingError::InvalidValueFunction(m));
                if knots.len() < 2 || knots[0] != (0.0, 0.0) || knots[knots.len() - 1].0 != 1.0 {
                    return bad("grid must run from (0, 0) to x = 1");
                }
                let mut last_slope = f64::INFINITY;
                for w in knots.windows(2) {
                    let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                    if !(dx > 0.0) || !(dy > 0.0) || !w[1].1.is_finite() {
                        return bad("grid must be strictly increasing");
                    }
                    let slope = dy / dx;
                    if slope > last_slope {
                        return bad("grid must be concave");
                    }
                    last_slope = slope;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_strictly_concave(&self) -> bool {
        matches!(self, Self::Power { exponent } if *exponent < 1.0)
    }

    /// Share `x` with `a * v'(x) = ratio * b * v'(1 - x)`, clamped to `[0, 1]`.
    /// Under linear value the condition holds nowhere or everywhere; ties give 1/2.
    fn balanced_share(&self, a: f64, b: f64, ratio: f64) -> f64 {
        match (a == 0.0, b == 0.0) {
            (true, true) => return 0.5,
            (true, false) => return 0.0,
            (false, true) => return 1.0,
            _ => {}
        }
        let target = ratio * b / a;
        match self {
            Self::Power { exponent } if *exponent < 1.0 => {
                let r = libm::pow(target, 1.0 / (exponent - 1.0));
                if r.is_infinite() {
                    1.0
                } else {
                    r / (1.0 + r)
                }
            }
            Self::Power { .. } | Self::Linear => match target.partial_cmp(&1.0) {
                Some(core::cmp::Ordering::Less) => 1.0,
                Some(core::cmp::Ordering::Greater) => 0.0,
                _ => 0.5,
            },
            Self::Grid { .. } => {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..MAX_BISECTIONS {
                    let mid = lo + (hi - lo) / 2.0;
                    if mid == lo || mid == hi {
                        break;
                    }
                    if self.slope(mid) > target * self.slope(1.0 - mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo + (hi - lo) / 2.0
            }
        }
    }
}

impl Valuation for ValueFunction {
    fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Self::Power { exponent } => libm::pow(x, *exponent),
            Self::Linear => x,
            Self::Grid { knots } => {
                let i = knots.partition_point(|k| k.0 <= x).clamp(1, knots.len() - 1);
                let (a, b) = (knots[i - 1], knots[i]);
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        }
    }

    fn slope(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Self::Power { exponent } if *exponent == 1.0 => 1.0,
            Self::Power { exponent } => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    exponent * libm::pow(x, exponent - 1.0)
                }
            }
            Self::Linear => 1.0,
            Self::Grid { knots } => {
                let i = knots.partition_point(|k| k.0 <= x).clamp(1, knots.len() - 1);
                let (a, b) = (knots[i - 1], knots[i]);
                (b.1 - a.1) / (b.0 - a.0)
            }
        }
    }
}

/// `(v1 + v2) / 2`, the pre-refinement value of a bundled share.
#[derive(Debug, Clone, Copy)]
pub struct Bundled<'a>(pub &'a ValueFunction, pub &'a ValueFunction);

impl Valuation for Bundled<'_> {
    fn value(&self, x: f64) -> f64 {
        0.5 * (self.0.value(x) + self.1.value(x))
    }

    fn slope(&self, x: f64) -> f64 {
        0.5 * (self.0.slope(x) + self.1.slope(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Allocation {
    /// Agent 1 receives `x` of the single good.
    Bundled(f64),
    /// Agent 1 receives `x1` of dimension 1 and `x2` of dimension 2.
    Separate(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BargainingSolution {
    pub allocation: Allocation,
    pub payoffs: (f64, f64),
    pub nash_product: f64,
}

/// Payoffs and their derivatives along one line through the allocation box.
/// Agent 1's payoff must be nondecreasing and agent 2's nonincreasing in `t`.
struct Line<F: Fn(f64) -> [f64; 4]> {
    eval: F,
    d: (f64, f64),
}

impl<F: Fn(f64) -> [f64; 4]> Line<F> {
    fn product(&self, t: f64) -> f64 {
        let [a, b, _, _] = (self.eval)(t);
        (a - self.d.0) * (b - self.d.1)
    }

    /// Largest `t` (or smallest, when `rising`) with the payoff condition met.
    fn boundary(&self, met: impl Fn(f64) -> bool, rising: bool) -> Option<f64> {
        let (start, end) = if rising { (0.0, 1.0) } else { (1.0, 0.0) };
        if met(start) {
            return Some(start);
        }
        if !met(end) {
            return None;
        }
        let (mut bad, mut good) = (start, end);
        for _ in 0..MAX_BISECTIONS {
            let mid = bad + (good - bad) / 2.0;
            if mid == bad || mid == good {
                break;
            }
            if met(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Some(good)
    }

    /// Maximizer of the Nash product on the feasible part of `[0, 1]`.
    fn maximize(&self) -> Option<f64> {
        let lo = self.boundary(|t| (self.eval)(t)[0] >= self.d.0, true)?;
        let hi = self.boundary(|t| (self.eval)(t)[1] >= self.d.1, false)?;
        if lo > hi {
            return None;
        }
        let (mut a, mut b) = (lo, hi);
        let mut cand = a + (b - a) / 2.0;
        let mut stationary = false;
        for _ in 0..MAX_BISECTIONS {
            cand = a + (b - a) / 2.0;
            let [u1, u2, du1, du2] = (self.eval)(cand);
            let deriv = du1 * (u2 - self.d.1) + (u1 - self.d.0) * du2;
            if deriv > 0.0 {
                a = cand;
            } else if deriv < 0.0 {
                b = cand;
            } else {
                stationary = true;
                break;
            }
            if b - a <= f64::EPSILON * b.abs().max(1e-300) {
                break;
            }
        }
        // an exact stationary point wins ties; otherwise endpoints do
        let order = if stationary { [cand, lo, hi] } else { [lo, hi, cand] };
        let mut best = (order[0], self.product(order[0]));
        for t in &order[1..] {
            let f = self.product(*t);
            if f > best.1 {
                best = (*t, f);
            }
        }
        Some(best.0)
    }
}

fn weighted_slope(w: f64, v: &ValueFunction, x: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * v.slope(x)
    }
}

/// Symmetric one-dimensional bargain: agent 1 gets `u(x)`, agent 2 `u(1 - x)`.
pub fn nash_solution_1d<V: Valuation>(u: &V, d: (f64, f64)) -> Result<BargainingSolution, BargainingError> {
    let line = Line { eval: |x: f64| [u.value(x), u.value(1.0 - x), u.slope(x), -u.slope(1.0 - x)], d };
    let x = line.maximize().ok_or(BargainingError::InfeasibleDisagreement)?;
    let payoffs = (u.value(x), u.value(1.0 - x));
    let nash_product = (payoffs.0 - d.0) * (payoffs.1 - d.1);
    if !(payoffs.0 > d.0 && payoffs.1 > d.1) {
        return Err(BargainingError::InfeasibleDisagreement);
    }
    Ok(BargainingSolution { allocation: Allocation::Bundled(x), payoffs, nash_product })
}

/// A two-dimensional bargain with additively separable utilities.
///
/// Agent 1 receives `(x1, x2)`, agent 2 `(1 - x1, 1 - x2)`, and
/// `U_i = scale[i] * (weights[i][0] * v[0](share_1) + weights[i][1] * v[1](share_2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableBargain {
    pub v: [ValueFunction; 2],
    pub weights: [[f64; 2]; 2],
    pub scale: [f64; 2],
    pub d: (f64, f64),
}

impl SeparableBargain {
    pub fn new(v1: ValueFunction, v2: ValueFunction, w1: f64, w2: f64, d: (f64, f64)) -> Self {
        Self { v: [v1, v2], weights: [[w1, 1.0 - w1], [w2, 1.0 - w2]], scale: [1.0, 1.0], d }
    }

    pub fn payoffs(&self, x1: f64, x2: f64) -> (f64, f64) {
        let [v1, v2] = &self.v;
        let [w1, w2] = self.weights;
        (
            self.scale[0] * (w1[0] * v1.value(x1) + w1[1] * v2.value(x2)),
            self.scale[1] * (w2[0] * v1.value(1.0 - x1) + w2[1] * v2.value(1.0 - x2)),
        )
    }

    pub fn nash_product(&self, x1: f64, x2: f64) -> f64 {
        let (a, b) = self.payoffs(x1, x2);
        (a - self.d.0) * (b - self.d.1)
    }

    fn validate(&self) -> Result<(), BargainingError> {
        self.v[0].validate()?;
        self.v[1].validate()?;
        let ok = |w: f64| (0.0..=1.0).contains(&w);
        if !self.weights.iter().flatten().all(|w| ok(*w)) || !self.scale.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(BargainingError::InvalidWeights("weights must lie in [0, 1] and scales be positive"));
        }
        Ok(())
    }

    /// Step along dimension `dim` with the other share held fixed.
    fn coordinate(&self, dim: usize, x: [f64; 2]) -> Option<f64> {
        let [s1, s2] = self.scale;
        let [w1, w2] = self.weights;
        let v = &self.v;
        let other = 1 - dim;
        let fixed1 = w1[other] * v[other].value(x[other]);
        let fixed2 = w2[other] * v[other].value(1.0 - x[other]);
        let line = Line {
            eval: |t: f64| {
                [
                    s1 * (w1[dim] * v[dim].value(t) + fixed1),
                    s2 * (w2[dim] * v[dim].value(1.0 - t) + fixed2),
                    s1 * weighted_slope(w1[dim], &v[dim], t),
                    -s2 * weighted_slope(w2[dim], &v[dim], 1.0 - t),
                ]
            },
            d: self.d,
        };
        line.maximize()
    }

    fn ascend(&self, mut x: [f64; 2]) -> Option<[f64; 2]> {
        let mut last = self.payoffs(x[0], x[1]);
        for _ in 0..MAX_SWEEPS {
            for dim in 0..2 {
                x[dim] = self.coordinate(dim, x)?;
            }
            let now = self.payoffs(x[0], x[1]);
            let moved = (now.0 - last.0).abs().max((now.1 - last.1).abs());
            last = now;
            if moved < CONVERGENCE_TOL {
                break;
            }
        }
        Some(x)
    }

    /// Allocation satisfying the first-order conditions: each share balances
    /// the agents' weighted marginal values at the ratio `(U1 - d1) / (U2 - d2)`,
    /// and that ratio is found by bisection on its logarithm.
    fn stationary_point(&self) -> [f64; 2] {
        let [s1, s2] = self.scale;
        let [w1, w2] = self.weights;
        let at = |ratio: f64| {
            [0, 1].map(|j| self.v[j].balanced_share(s1 * w1[j], s2 * w2[j], ratio))
        };
        let excess = |ratio: f64| {
            let x = at(ratio);
            let (u1, u2) = self.payoffs(x[0], x[1]);
            ratio * (u2 - self.d.1) - (u1 - self.d.0)
        };
        let (mut lo, mut hi) = (-60.0f64, 60.0f64);
        for _ in 0..MAX_BISECTIONS {
            let mid = lo + (hi - lo) / 2.0;
            if mid == lo || mid == hi {
                break;
            }
            let e = excess(libm::exp(mid));
            if e < 0.0 {
                lo = mid;
            } else if e > 0.0 {
                hi = mid;
            } else {
                return at(libm::exp(mid));
            }
        }
        at(libm::exp(lo + (hi - lo) / 2.0))
    }

    /// Nash solution over `[0, 1]^2`: coordinate ascent started from the
    /// first-order point and from the centre, keeping the larger product
    /// (the first-order start on ties).
    pub fn solve(&self) -> Result<BargainingSolution, BargainingError> {
        self.validate()?;
        let starts = [self.stationary_point(), [0.5, 0.5]];
        let mut best: Option<([f64; 2], f64)> = None;
        for s in starts {
            let Some(x) = self.ascend(s) else { continue };
            let f = self.nash_product(x[0], x[1]);
            if best.is_none_or(|b| f > b.1) {
                best = Some((x, f));
            }
        }
        let (x, nash_product) = best.ok_or(BargainingError::InfeasibleDisagreement)?;
        let payoffs = self.payoffs(x[0], x[1]);
        if !(payoffs.0 > self.d.0 && payoffs.1 > self.d.1) {
            return Err(BargainingError::InfeasibleDisagreement);
        }
        Ok(BargainingSolution { allocation: Allocation::Separate(x[0], x[1]), payoffs, nash_product })
    }

    /// Nash solution restricted to bundled allocations `x1 = x2`.
    pub fn solve_bundled(&self) -> Result<BargainingSolution, BargainingError> {
        self.validate()?;
        let [s1, s2] = self.scale;
        let [w1, w2] = self.weights;
        let [v1, v2] = &self.v;
        let line = Line {
            eval: |t: f64| {
                [
                    s1 * (w1[0] * v1.value(t) + w1[1] * v2.value(t)),
                    s2 * (w2[0] * v1.value(1.0 - t) + w2[1] * v2.value(1.0 - t)),
                    s1 * (weighted_slope(w1[0], v1, t) + weighted_slope(w1[1], v2, t)),
                    -s2 * (weighted_slope(w2[0], v1, 1.0 - t) + weighted_slope(w2[1], v2, 1.0 - t)),
                ]
            },
            d: self.d,
        };
        let t = line.maximize().ok_or(BargainingError::InfeasibleDisagreement)?;
        let payoffs = self.payoffs(t, t);
        if !(payoffs.0 > self.d.0 && payoffs.1 > self.d.1) {
            return Err(BargainingError::InfeasibleDisagreement);
        }
        Ok(BargainingSolution { allocation: Allocation::Bundled(t), payoffs, nash_product: self.nash_product(t, t) })
    }
}

/// Probability and first-dimension weight pair of one realization.
pub type WeightDraw = (f64, (f64, f64));

/// Joint law of the agents' first-dimension weights `(w^1_1, w^2_1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightModel {
    /// Each weight is `1/2 - sigma` or `1/2 + sigma`; both on the same side
    /// with probability `(1 + rho) / 2`.
    TwoPoint { sigma: f64, rho: f64 },
    /// Independent uniforms on `1/2 ± sqrt(3) * sigma` (standard deviation `sigma`).
    IndependentUniform { sigma: f64 },
}

impl WeightModel {
    pub fn validate(&self) -> Result<(), BargainingError> {
        match *self {
            Self::TwoPoint { sigma, rho } => {
                if !(sigma > 0.0 && sigma <= 0.5) {
                    return Err(BargainingError::InvalidWeights("sigma must lie in (0, 1/2]"));
                }
                if !(-1.0..=1.0).contains(&rho) {
                    return Err(BargainingError::InvalidWeights("rho must lie in [-1, 1]"));
                }
            }
            Self::IndependentUniform { sigma } => {
                if !(sigma > 0.0 && libm::sqrt(3.0) * sigma <= 0.5) {
                    return Err(BargainingError::InvalidWeights("sigma must lie in (0, 1/(2 sqrt 3)]"));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match *self {
            Self::TwoPoint { sigma, rho } => {
                let first = if rng.random::<f64>() < 0.5 { 0.5 + sigma } else { 0.5 - sigma };
                let same = rng.random::<f64>() < 0.5 * (1.0 + rho);
                (first, if same { first } else { 1.0 - first })
            }
            Self::IndependentUniform { sigma } => {
                let h = libm::sqrt(3.0) * sigma;
                let draw = |r: &mut R| 0.5 - h + 2.0 * h * r.random::<f64>();
                let a = draw(rng);
                (a, draw(rng))
            }
        }
    }

    /// Weight pairs with positive probability, for the two-point model.
    pub fn enumerate(&self) -> Result<Vec<WeightDraw>, BargainingError> {
        let Self::TwoPoint { sigma, rho } = *self else {
            return Err(BargainingError::ExhaustiveUnavailable);
        };
        let (lo, hi) = (0.5 - sigma, 0.5 + sigma);
        let same = 0.25 * (1.0 + rho);
        let differ = 0.25 * (1.0 - rho);
        Ok([(same, (lo, lo)), (differ, (lo, hi)), (differ, (hi, lo)), (same, (hi, hi))]
            .into_iter()
            .filter(|o| o.0 > 0.0)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BargainingSpec {
    pub v1: ValueFunction,
    pub v2: ValueFunction,
    pub d: (f64, f64),
    pub weights: WeightModel,
}

impl BargainingSpec {
    pub fn new(v1: ValueFunction, v2: ValueFunction, weights: WeightModel) -> Self {
        Self { v1, v2, d: (0.0, 0.0), weights }
    }

    pub fn validate(&self) -> Result<(), BargainingError> {
        self.v1.validate()?;
        self.v2.validate()?;
        if self.d.0 != self.d.1 || !self.d.0.is_finite() {
            return Err(BargainingError::AsymmetricDisagreement(self.d.0, self.d.1));
        }
        self.weights.validate()
    }

    /// Pre-refinement solution on the bundled value `(v1 + v2) / 2`.
    pub fn baseline(&self) -> Result<BargainingSolution, BargainingError> {
        nash_solution_1d(&Bundled(&self.v1, &self.v2), self.d)
    }

    pub fn realized(&self, weights: (f64, f64)) -> SeparableBargain {
        SeparableBargain::new(self.v1.clone(), self.v2.clone(), weights.0, weights.1, self.d)
    }
}

/// Post-refinement Nash solution for realized first-dimension weights.
pub fn nash_solution_2d(spec: &BargainingSpec, weights: (f64, f64)) -> Result<BargainingSolution, BargainingError> {
    spec.realized(weights).solve()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BargainRealization {
    /// Probability weight (`1/n` under Monte Carlo).
    pub prob: f64,
    pub weights: (f64, f64),
    pub solution: BargainingSolution,
    pub gains: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BargainingReport {
    pub baseline: BargainingSolution,
    pub payoff1: Estimate,
    pub payoff2: Estimate,
    pub gain1: Estimate,
    pub gain2: Estimate,
    pub realizations: Vec<BargainRealization>,
}

fn realize(spec: &BargainingSpec, base: &BargainingSolution, prob: f64, w: (f64, f64)) -> Result<BargainRealization, BargainingError> {
    let solution = nash_solution_2d(spec, w)?;
    let gains = (solution.payoffs.0 - base.payoffs.0, solution.payoffs.1 - base.payoffs.1);
    Ok(BargainRealization { prob, weights: w, solution, gains })
}

/// Expected post-refinement payoffs and gains over the bundled baseline.
pub fn expected_refined_payoffs<E: Executor>(
    spec: &BargainingSpec,
    method: crate::games::Method,
    n: usize,
    stream: SubStream,
    exec: &E,
) -> Result<BargainingReport, BargainingError> {
    spec.validate()?;
    let baseline = spec.baseline()?;
    match method {
        crate::games::Method::Exhaustive => {
            let realizations = spec
                .weights
                .enumerate()?
                .into_iter()
                .map(|(p, w)| realize(spec, &baseline, p, w))
                .collect::<Result<Vec<_>, _>>()?;
            let ex = |f: &dyn Fn(&BargainRealization) -> f64| Estimate::exact(realizations.iter().map(|r| r.prob * f(r)).sum());
            Ok(BargainingReport {
                baseline,
                payoff1: ex(&|r| r.solution.payoffs.0),
                payoff2: ex(&|r| r.solution.payoffs.1),
                gain1: ex(&|r| r.gains.0),
                gain2: ex(&|r| r.gains.1),
                realizations,
            })
        }
        crate::games::Method::MonteCarlo => {
            if n == 0 {
                return Err(BargainingError::NoSamples);
            }
            let realizations = exec
                .map(n, |i| realize(spec, &baseline, 1.0 / n as f64, spec.weights.sample(&mut stream.rng(i as u64))))
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            let est = |f: &dyn Fn(&BargainRealization) -> f64| {
                Estimate::from_samples(&realizations.iter().map(f).collect::<Vec<_>>())
            };
            Ok(BargainingReport {
                baseline,
                payoff1: est(&|r| r.solution.payoffs.0),
                payoff2: est(&|r| r.solution.payoffs.1),
                gain1: est(&|r| r.gains.0),
                gain2: est(&|r| r.gains.1),
                realizations,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub gain1: f64,
    pub gain2: f64,
    pub baseline: (f64, f64),
}

/// Exact expected gains under the two-point weight model for each `rho`.
pub fn correlation_sweep(spec: &BargainingSpec, sigma: f64, rhos: &[f64]) -> Result<Vec<SweepRow>, BargainingError> {
    if rhos.windows(2).any(|w| !(w[0] <= w[1])) || rhos.iter().any(|r| !(-1.0..=1.0).contains(r)) {
        return Err(BargainingError::UnsortedSweep);
    }
    rhos.iter()
        .map(|&rho| {
            let spec = BargainingSpec { weights: WeightModel::TwoPoint { sigma, rho }, ..spec.clone() };
            let r = expected_refined_payoffs(&spec, crate::games::Method::Exhaustive, 0, SubStream::new(0), &crate::stats::Sequential)?;
            Ok(SweepRow { rho, gain1: r.gain1.mean, gain2: r.gain2.mean, baseline: r.baseline.payoffs })
        })
        .collect()
}

/// Gains strictly fall along the sweep, by more than `tol` per step.
pub fn is_strictly_decreasing(rows: &[SweepRow], tol: f64) -> bool {
    rows.windows(2).all(|w| w[1].gain1 < w[0].gain1 - tol && w[1].gain2 < w[0].gain2 - tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Method;
    use crate::stats::Sequential;
    use alloc::vec;

    #[test]
    fn one_dimensional_examples() {
        let s = nash_solution_1d(&ValueFunction::Linear, (0.0, 0.0)).unwrap();
        assert_eq!(s.allocation, Allocation::Bundled(0.5));
        assert_eq!(s.payoffs, (0.5, 0.5));
        let s = nash_solution_1d(&ValueFunction::sqrt(), (0.0, 0.0)).unwrap();
        assert_eq!(s.allocation, Allocation::Bundled(0.5));
        assert_eq!(s.payoffs, (libm::sqrt(0.5), libm::sqrt(0.5)));
        assert_eq!(nash_solution_1d(&ValueFunction::Linear, (0.9, 0.9)), Err(BargainingError::InfeasibleDisagreement));
    }

    #[test]
    fn orthogonal_weights_reach_corner() {
        let s = SeparableBargain::new(ValueFunction::Linear, ValueFunction::Linear, 1.0, 0.0, (0.0, 0.0)).solve().unwrap();
        assert_eq!(s.allocation, Allocation::Separate(1.0, 0.0));
        assert_eq!(s.payoffs, (1.0, 1.0));
    }

    #[test]
    fn equal_weights_keep_bundled_optimum() {
        let s = SeparableBargain::new(ValueFunction::sqrt(), ValueFunction::sqrt(), 0.5, 0.5, (0.0, 0.0)).solve().unwrap();
        let one = nash_solution_1d(&ValueFunction::sqrt(), (0.0, 0.0)).unwrap();
        assert!((s.payoffs.0 - one.payoffs.0).abs() < 1e-9);
        assert!((s.payoffs.1 - one.payoffs.1).abs() < 1e-9);
    }

    #[test]
    fn grid_value_function() {
        let g = ValueFunction::Grid { knots: vec![(0.0, 0.0), (0.5, 0.75), (1.0, 1.0)] };
        g.validate().unwrap();
        assert_eq!(g.value(0.25), 0.375);
        assert_eq!(g.slope(0.75), 0.5);
        let convex = ValueFunction::Grid { knots: vec![(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)] };
        assert!(convex.validate().is_err());
    }

    #[test]
    fn doubling_under_anti_correlated_orthogonal_weights() {
        let spec = BargainingSpec::new(ValueFunction::Linear, ValueFunction::Linear, WeightModel::TwoPoint { sigma: 0.5, rho: -1.0 });
        let r = expected_refined_payoffs(&spec, Method::Exhaustive, 0, SubStream::new(7), &Sequential).unwrap();
        assert_eq!(r.baseline.payoffs, (0.5, 0.5));
        assert_eq!((r.payoff1.mean, r.payoff2.mean), (1.0, 1.0));
        assert_eq!((r.gain1.mean, r.gain2.mean), (0.5, 0.5));
    }

    #[test]
    fn sweep_matches_disagreement_probability() {
        let spec = BargainingSpec::new(ValueFunction::Linear, ValueFunction::Linear, WeightModel::TwoPoint { sigma: 0.5, rho: 0.0 });
        let rows = correlation_sweep(&spec, 0.5, &[-1.0, 0.0, 1.0]).unwrap();
        let g: Vec<f64> = rows.iter().map(|r| r.gain1).collect();
        assert_eq!(g, vec![0.5, 0.25, 0.0]);
        assert!(is_strictly_decreasing(&rows, 1e-9));
        assert_eq!(correlation_sweep(&spec, 0.5, &[0.0, -1.0]), Err(BargainingError::UnsortedSweep));
    }

    #[test]
    fn rejects_asymmetric_disagreement() {
        let mut spec = BargainingSpec::new(ValueFunction::Linear, ValueFunction::Linear, WeightModel::TwoPoint { sigma: 0.5, rho: 0.0 });
        spec.d = (0.0, 0.1);
        assert_eq!(spec.validate(), Err(BargainingError::AsymmetricDisagreement(0.0, 0.1)));
    }
}
