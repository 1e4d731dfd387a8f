//! Several value dimensions over one decision problem: dilemmas,
//! multi-value dominance, and how often refinement reveals a dominating act.

use alloc::vec::Vec;

use thiserror::Error;

use crate::algebra::{AlgebraError, DecisionProblem};
use crate::dist::{DistError, DistSpec};
use crate::oracles::DiscreteOutcomeSpace;
use crate::stats::{Estimate, Executor, SubStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultiValueError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("{field}: {source}")]
    Dist { field: &'static str, source: DistError },
    #[error("a value profile needs at least two dimensions, got {0}")]
    TooFewDimensions(usize),
    #[error("dimension {dim} has {got} values for {atoms} atoms")]
    DimensionLength { dim: usize, got: usize, atoms: usize },
    #[error("joint model has {got} dimensions, profile has {expected}")]
    JointDimensions { got: usize, expected: usize },
    #[error("acts {a} and {not_a} do not form a dilemma")]
    NotADilemma { a: usize, not_a: usize },
    #[error("weights must be nonnegative and sum to 1, got total {0}")]
    BadSimplex(f64),
    #[error("value must be finite")]
    NonFinite,
    #[error("sample count must be positive")]
    NoSamples,
    #[error("exhaustive evaluation needs finite-support distributions")]
    ExhaustiveUnavailable,
}

/// Per-atom values `V_1 .. V_k` over a shared problem skeleton. The
/// skeleton's credences weight the averages; its desirabilities are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueProfile {
    problem: DecisionProblem,
    dims: Vec<Vec<f64>>,
}

impl ValueProfile {
    pub fn new(problem: DecisionProblem, dims: Vec<Vec<f64>>) -> Result<Self, MultiValueError> {
        if dims.len() < 2 {
            return Err(MultiValueError::TooFewDimensions(dims.len()));
        }
        let atoms = problem.atoms().len();
        for (dim, values) in dims.iter().enumerate() {
            if values.len() != atoms {
                return Err(MultiValueError::DimensionLength { dim, got: values.len(), atoms });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(MultiValueError::NonFinite);
            }
        }
        Ok(Self { problem, dims })
    }

    /// One atom per act with equal credence; `acts[j][i]` is `V_i` of act `j`.
    pub fn from_act_values(acts: &[Vec<f64>]) -> Result<Self, MultiValueError> {
        let k = acts.first().map_or(0, Vec::len);
        let p = alloc::vec![1.0 / acts.len() as f64; acts.len()];
        let problem = DecisionProblem::from_acts(&p, &alloc::vec![0.0; acts.len()])?;
        let dims = (0..k).map(|i| acts.iter().map(|a| a.get(i).copied().unwrap_or(f64::NAN)).collect()).collect();
        Self::new(problem, dims)
    }

    pub fn problem(&self) -> &DecisionProblem {
        &self.problem
    }

    pub fn dims(&self) -> &[Vec<f64>] {
        &self.dims
    }

    pub fn dimension_count(&self) -> usize {
        self.dims.len()
    }

    /// `(V_1(act), ..., V_k(act))`, each a credence-weighted average.
    pub fn act_values(&self, act: usize) -> Result<Vec<f64>, MultiValueError> {
        let prop = self.problem.act(act)?;
        let mut mass = 0.0;
        let mut sums = alloc::vec![0.0; self.dims.len()];
        for &id in &prop.atoms {
            let i = self.problem.index_of(id)?;
            let p = self.problem.credences()[i];
            mass += p;
            for (s, dim) in sums.iter_mut().zip(&self.dims) {
                *s += p * dim[i];
            }
        }
        if mass <= 0.0 {
            return Err(AlgebraError::NullProbability.into());
        }
        if prop.atoms.len() == 1 {
            let i = self.problem.index_of(*prop.atoms.first().expect("nonempty"))?;
            return Ok(self.dims.iter().map(|d| d[i]).collect());
        }
        Ok(sums.into_iter().map(|s| s / mass).collect())
    }
}

/// For two dimensions: `V1(A) > V1(notA)` and `V2(A) < V2(notA)`. For more,
/// neither act weakly dominates the other on every dimension.
pub fn detect_dilemma(profile: &ValueProfile, a: usize, not_a: usize) -> Result<bool, MultiValueError> {
    let va = profile.act_values(a)?;
    let vn = profile.act_values(not_a)?;
    Ok(is_dilemma(&va, &vn))
}

fn is_dilemma(va: &[f64], vn: &[f64]) -> bool {
    if va.len() == 2 {
        return va[0] > vn[0] && va[1] < vn[1];
    }
    let weakly = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(a, b)| a >= b);
    !weakly(va, vn) && !weakly(vn, va)
}

/// `candidate` is at least the maximum of `others` on every dimension and
/// strictly above it on at least one.
pub fn multi_value_dominates(candidate: &[f64], others: &[&[f64]]) -> bool {
    let mut strict = false;
    for (i, &c) in candidate.iter().enumerate() {
        let best = others.iter().map(|o| o[i]).fold(f64::NEG_INFINITY, f64::max);
        if c < best {
            return false;
        }
        strict |= c > best;
    }
    strict
}

/// `sum_i w_i * V_i` for a weight vector on the simplex.
pub fn aggregate_utility(values: &[f64], weights: &[f64]) -> Result<f64, MultiValueError> {
    let total: f64 = weights.iter().sum();
    if weights.len() != values.len() || weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(MultiValueError::BadSimplex(total));
    }
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum())
}

/// How the per-dimension spreads of one refinement are tied together. The
/// split probability `q` is always shared: one event splits the act.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// Each dimension draws its own spread from its marginal.
    Independent,
    /// One draw from the first marginal is used on every dimension.
    CommonSpread,
    /// Explicit finite joint over spread vectors; marginals are ignored.
    Explicit(DiscreteOutcomeSpace<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointRefinementModel {
    pub q: DistSpec,
    pub marginals: Vec<DistSpec>,
    pub coupling: Coupling,
}

impl JointRefinementModel {
    /// The explicit two-point joint: dimension `i` moves by `+offsets[i]` or
    /// `-offsets[i]`; `pmf` gives the probability of each sign pattern, with
    /// pattern bit `i` set meaning `+`.
    pub fn two_point_joint(q: DistSpec, offsets: &[f64], pmf: &[f64]) -> Result<Self, MultiValueError> {
        let k = offsets.len();
        if pmf.len() != 1 << k {
            return Err(MultiValueError::JointDimensions { got: pmf.len(), expected: 1 << k });
        }
        let points = pmf
            .iter()
            .enumerate()
            .map(|(pattern, &p)| {
                let spread = offsets
                    .iter()
                    .enumerate()
                    .map(|(i, a)| if pattern & (1 << i) != 0 { *a } else { -*a })
                    .collect();
                (p, spread)
            })
            .collect();
        let space = DiscreteOutcomeSpace::new(points).map_err(|_| MultiValueError::BadSimplex(pmf.iter().sum()))?;
        Ok(Self { q, marginals: alloc::vec![DistSpec::point(0.0); k], coupling: Coupling::Explicit(space) })
    }

    pub fn dimension_count(&self) -> usize {
        match &self.coupling {
            Coupling::Explicit(space) => space.outcomes().first().map_or(0, |o| o.1.len()),
            _ => self.marginals.len(),
        }
    }

    pub fn validate(&self, dims: usize) -> Result<(), MultiValueError> {
        self.q.require_within(0.0, 1.0).map_err(|source| MultiValueError::Dist { field: "q", source })?;
        for m in &self.marginals {
            m.validate().map_err(|source| MultiValueError::Dist { field: "spread", source })?;
        }
        let got = self.dimension_count();
        let consistent = match &self.coupling {
            Coupling::Explicit(space) => space.outcomes().iter().all(|o| o.1.len() == got),
            Coupling::CommonSpread => !self.marginals.is_empty(),
            Coupling::Independent => true,
        };
        if got != dims || !consistent {
            return Err(MultiValueError::JointDimensions { got, expected: dims });
        }
        Ok(())
    }

    fn spread<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>, MultiValueError> {
        let dist_err = |source| MultiValueError::Dist { field: "spread", source };
        match &self.coupling {
            Coupling::Independent => self.marginals.iter().map(|m| m.sample(rng).map_err(dist_err)).collect(),
            Coupling::CommonSpread => {
                let d = self.marginals[0].sample(rng).map_err(dist_err)?;
                Ok(alloc::vec![d; self.marginals.len()])
            }
            Coupling::Explicit(space) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (p, spread) in space.outcomes() {
                    acc += p;
                    if u < acc {
                        return Ok(spread.clone());
                    }
                }
                Ok(space.outcomes().last().map(|o| o.1.clone()).unwrap_or_default())
            }
        }
    }

    /// Finite joint law of the spread vector, when every marginal has finite support.
    pub fn spread_space(&self) -> Option<DiscreteOutcomeSpace<Vec<f64>>> {
        match &self.coupling {
            Coupling::Explicit(space) => Some(space.clone()),
            Coupling::CommonSpread => {
                let k = self.marginals.len();
                let atoms = self.marginals[0].finite_support()?;
                DiscreteOutcomeSpace::new(atoms.into_iter().map(|(p, d)| (p, alloc::vec![d; k])).collect()).ok()
            }
            Coupling::Independent => {
                let mut acc: Vec<(f64, Vec<f64>)> = alloc::vec![(1.0, Vec::new())];
                for m in &self.marginals {
                    let atoms = m.finite_support()?;
                    acc = acc
                        .iter()
                        .flat_map(|(p, prefix)| {
                            atoms.iter().map(move |&(pa, d)| {
                                let mut v = prefix.clone();
                                v.push(d);
                                (p * pa, v)
                            })
                        })
                        .collect();
                }
                DiscreteOutcomeSpace::new(acc).ok()
            }
        }
    }
}

/// Values of the two refined branches on every dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub q: f64,
    pub branch1: Vec<f64>,
    pub branch2: Vec<f64>,
}

impl JointOutcome {
    /// Per-sample construction: each dimension reflects its pre-refinement value.
    pub fn construct(base: &[f64], q: f64, spread: &[f64]) -> Self {
        Self {
            q,
            branch1: base.iter().zip(spread).map(|(u, d)| u + (1.0 - q) * d).collect(),
            branch2: base.iter().zip(spread).map(|(u, d)| u - q * d).collect(),
        }
    }

    /// Largest `|q * v_i1 + (1 - q) * v_i2 - V_i(A)|` over dimensions.
    pub fn reflection_residual(&self, base: &[f64]) -> f64 {
        self.branch1
            .iter()
            .zip(&self.branch2)
            .zip(base)
            .map(|((a, b), u)| (self.q * a + (1.0 - self.q) * b - u).abs())
            .fold(0.0, f64::max)
    }
}

/// Which refined branch, if any, dominates the rest of the refined partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Unresolved,
    /// `A and B1` dominates `{notA, A and B2}`.
    First,
    /// `A and B2` dominates `{notA, A and B1}`.
    Second,
}

pub fn classify(outcome: &JointOutcome, not_a: &[f64]) -> Resolution {
    let first = multi_value_dominates(&outcome.branch1, &[not_a, &outcome.branch2]);
    let second = multi_value_dominates(&outcome.branch2, &[not_a, &outcome.branch1]);
    debug_assert!(!(first && second));
    match (first, second) {
        (true, _) => Resolution::First,
        (_, true) => Resolution::Second,
        _ => Resolution::Unresolved,
    }
}

/// Draw `index` of `stream` for refining an act with values `base`.
pub fn sample_joint(
    model: &JointRefinementModel,
    base: &[f64],
    stream: SubStream,
    index: u64,
) -> Result<JointOutcome, MultiValueError> {
    let mut rng = stream.rng(index);
    let q = model.q.sample(&mut rng).map_err(|source| MultiValueError::Dist { field: "q", source })?;
    let spread = model.spread(&mut rng)?;
    Ok(JointOutcome::construct(base, q, &spread))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionEstimate {
    /// Probability that some refined branch dominates.
    pub prob: Estimate,
    pub p_first: f64,
    pub p_second: f64,
    /// Samples (or outcomes) where both branches were classified dominant; always 0.
    pub overlaps: usize,
}

fn prepare(
    profile: &ValueProfile,
    a: usize,
    not_a: usize,
    joint: &JointRefinementModel,
) -> Result<(Vec<f64>, Vec<f64>), MultiValueError> {
    let va = profile.act_values(a)?;
    let vn = profile.act_values(not_a)?;
    if !is_dilemma(&va, &vn) {
        return Err(MultiValueError::NotADilemma { a, not_a });
    }
    joint.validate(profile.dimension_count())?;
    Ok((va, vn))
}

fn both_dominate(o: &JointOutcome, not_a: &[f64]) -> bool {
    multi_value_dominates(&o.branch1, &[not_a, &o.branch2]) && multi_value_dominates(&o.branch2, &[not_a, &o.branch1])
}

/// Monte Carlo probability that refining `a` reveals a dominating branch.
pub fn resolution_probability<E: Executor>(
    profile: &ValueProfile,
    a: usize,
    not_a: usize,
    joint: &JointRefinementModel,
    n: usize,
    stream: SubStream,
    exec: &E,
) -> Result<ResolutionEstimate, MultiValueError> {
    if n == 0 {
        return Err(MultiValueError::NoSamples);
    }
    let (va, vn) = prepare(profile, a, not_a, joint)?;
    let draws: Vec<(Resolution, bool)> = exec
        .map(n, |i| {
            let o = sample_joint(joint, &va, stream, i as u64)?;
            Ok((classify(&o, &vn), both_dominate(&o, &vn)))
        })
        .into_iter()
        .collect::<Result<_, MultiValueError>>()?;
    let hits: Vec<f64> = draws.iter().map(|d| if d.0 == Resolution::Unresolved { 0.0 } else { 1.0 }).collect();
    let count = |r: Resolution| draws.iter().filter(|d| d.0 == r).count() as f64 / n as f64;
    Ok(ResolutionEstimate {
        prob: Estimate::from_samples(&hits),
        p_first: count(Resolution::First),
        p_second: count(Resolution::Second),
        overlaps: draws.iter().filter(|d| d.1).count(),
    })
}

/// Exact resolution probability for finite-support joint models.
pub fn exhaustive_resolution_probability(
    profile: &ValueProfile,
    a: usize,
    not_a: usize,
    joint: &JointRefinementModel,
) -> Result<ResolutionEstimate, MultiValueError> {
    let (va, vn) = prepare(profile, a, not_a, joint)?;
    let qs = joint.q.finite_support().ok_or(MultiValueError::ExhaustiveUnavailable)?;
    let spreads = joint.spread_space().ok_or(MultiValueError::ExhaustiveUnavailable)?;
    let (mut p_first, mut p_second, mut overlaps) = (0.0, 0.0, 0);
    for &(pq, q) in &qs {
        for (ps, spread) in spreads.outcomes() {
            let o = JointOutcome::construct(&va, q, spread);
            match classify(&o, &vn) {
                Resolution::First => p_first += pq * ps,
                Resolution::Second => p_second += pq * ps,
                Resolution::Unresolved => {}
            }
            overlaps += both_dominate(&o, &vn) as usize;
        }
    }
    Ok(ResolutionEstimate { prob: Estimate::exact(p_first + p_second), p_first, p_second, overlaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Sequential;
    use alloc::vec;

    fn dilemma() -> ValueProfile {
        ValueProfile::from_act_values(&[vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn dilemma_shapes() {
        assert!(detect_dilemma(&dilemma(), 0, 1).unwrap());
        let dominated = ValueProfile::from_act_values(&[vec![2.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(!detect_dilemma(&dominated, 0, 1).unwrap());
        // V1 = V2 = (2, 1): one effective dimension
        let same = ValueProfile::from_act_values(&[vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap();
        assert!(!detect_dilemma(&same, 0, 1).unwrap());
    }

    #[test]
    fn dominance_definition() {
        assert!(multi_value_dominates(&[3.0, 3.0], &[&[2.0, 0.0], &[0.0, 2.0]]));
        assert!(!multi_value_dominates(&[3.0, 1.0], &[&[2.0, 0.0], &[0.0, 2.0]]));
        assert!(!multi_value_dominates(&[2.0, 2.0], &[&[2.0, 2.0]]));
    }

    #[test]
    fn aggregate_on_simplex() {
        assert_eq!(aggregate_utility(&[5.0, 7.0], &[1.0, 0.0]).unwrap(), 5.0);
        assert_eq!(aggregate_utility(&[2.0, 0.0], &[0.5, 0.5]).unwrap(), 1.0);
        assert!(matches!(aggregate_utility(&[2.0, 0.0], &[0.7, 0.5]), Err(MultiValueError::BadSimplex(_))));
        assert!(matches!(aggregate_utility(&[2.0, 0.0], &[1.5, -0.5]), Err(MultiValueError::BadSimplex(_))));
    }

    #[test]
    fn spread_free_model_never_resolves() {
        let joint = JointRefinementModel {
            q: DistSpec::point(0.5),
            marginals: vec![DistSpec::point(0.0); 2],
            coupling: Coupling::Independent,
        };
        let e = resolution_probability(&dilemma(), 0, 1, &joint, 200, SubStream::new(1), &Sequential).unwrap();
        assert_eq!(e.prob.mean, 0.0);
        assert_eq!(exhaustive_resolution_probability(&dilemma(), 0, 1, &joint).unwrap().prob.mean, 0.0);
    }

    #[test]
    fn non_dilemma_is_rejected() {
        let joint = JointRefinementModel {
            q: DistSpec::point(0.5),
            marginals: vec![DistSpec::pm(1.0); 2],
            coupling: Coupling::Independent,
        };
        let err = resolution_probability(&dilemma(), 1, 0, &joint, 10, SubStream::new(1), &Sequential);
        assert_eq!(err.unwrap_err(), MultiValueError::NotADilemma { a: 1, not_a: 0 });
    }

    #[test]
    fn per_dimension_reflection_is_exact() {
        let joint = JointRefinementModel {
            q: DistSpec::uniform(0.1, 0.9),
            marginals: vec![DistSpec::uniform(-3.0, 3.0), DistSpec::gaussian(0.0, 2.0)],
            coupling: Coupling::Independent,
        };
        let base = [2.0, 0.0];
        for i in 0..500 {
            let o = sample_joint(&joint, &base, SubStream::new(8), i).unwrap();
            assert!(o.reflection_residual(&base) < 1e-12);
        }
    }
}
