//! Value of refinement for a single agent, refinement chains, and the
//! fixed-cost stopping rule.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::algebra::{AlgebraError, DecisionProblem, SplitSpec};
use crate::refinement::{ModelError, RefinementModel, RefinementOutcome};
use crate::stats::{pairwise_sum, Estimate, Executor, SubStream};

/// Agreement required between a model's `(u0, p0)` and the refined act.
pub const MODEL_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SingleError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model expects (u0, p0) = ({model_u0}, {model_p0}) but act has ({act_u}, {act_p})")]
    ModelMismatch { model_u0: f64, model_p0: f64, act_u: f64, act_p: f64 },
    #[error("exhaustive evaluation needs finite-support distributions")]
    ExhaustiveUnavailable,
    #[error("sample count must be positive")]
    NoSamples,
    #[error("gains do not exhibit vanishing returns: {0}")]
    NotVanishingReturns(&'static str),
    #[error("refinement cost must be positive and finite, got {0}")]
    InvalidCost(f64),
}

/// What the agent maximizes over the act partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    /// `max U(A)`.
    #[default]
    Utility,
    /// `max P(A) * U(A)`.
    ProbabilityWeighted,
}

/// Lowest-index act of maximal desirability.
pub fn best_act(problem: &DecisionProblem) -> Result<(usize, f64), AlgebraError> {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..problem.act_count() {
        let u = problem.act_desirability(i)?;
        if u > best.1 {
            best = (i, u);
        }
    }
    Ok(best)
}

/// Optimal value of a problem under `criterion`.
pub fn optimal_value(problem: &DecisionProblem, criterion: Criterion) -> Result<f64, AlgebraError> {
    let mut best = f64::NEG_INFINITY;
    for i in 0..problem.act_count() {
        let u = problem.act_desirability(i)?;
        let v = match criterion {
            Criterion::Utility => u,
            Criterion::ProbabilityWeighted => problem.act_probability(i)? * u,
        };
        best = best.max(v);
    }
    Ok(best)
}

/// Pre-refinement optimum against the estimated post-refinement optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementGain {
    pub v0: f64,
    pub v1_mean: f64,
    /// Standard error of `v1_mean`.
    pub std_error: f64,
    /// Standard error of the paired gain `V1 - V0`; equals `std_error` when `v0` is exact.
    pub gain_std_error: f64,
    pub n: usize,
}

impl RefinementGain {
    pub fn gain(&self) -> f64 {
        self.v1_mean - self.v0
    }

    /// Lower end of the two-sided interval at `z` for the gain.
    pub fn gain_lower(&self, z: f64) -> f64 {
        self.gain() - z * self.gain_std_error
    }
}

fn check_model(problem: &DecisionProblem, act: usize, model: &RefinementModel) -> Result<(), SingleError> {
    let act_u = problem.act_desirability(act)?;
    let act_p = problem.act_probability(act)?;
    if (model.u0 - act_u).abs() > MODEL_MATCH_TOL || (model.p0 - act_p).abs() > MODEL_MATCH_TOL {
        return Err(SingleError::ModelMismatch { model_u0: model.u0, model_p0: model.p0, act_u, act_p });
    }
    model.validate()?;
    Ok(())
}

fn refined_value(
    problem: &DecisionProblem,
    act: usize,
    outcome: RefinementOutcome,
    criterion: Criterion,
) -> Result<f64, SingleError> {
    let refined = problem.refine_binary(&SplitSpec::new(act, outcome))?;
    Ok(optimal_value(&refined, criterion)?)
}

/// Monte Carlo estimate of `E[V1]` after refining `act` under `model`.
pub fn value_of_refinement<E: Executor>(
    problem: &DecisionProblem,
    act: usize,
    model: &RefinementModel,
    n: usize,
    stream: SubStream,
    criterion: Criterion,
    exec: &E,
) -> Result<RefinementGain, SingleError> {
    if n == 0 {
        return Err(SingleError::NoSamples);
    }
    check_model(problem, act, model)?;
    let v0 = optimal_value(problem, criterion)?;
    let values: Vec<f64> = exec
        .map(n, |i| {
            let outcome = model.sample(&mut stream.rng(i as u64))?;
            refined_value(problem, act, outcome, criterion)
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    let est = Estimate::from_samples(&values);
    Ok(RefinementGain { v0, v1_mean: est.mean, std_error: est.std_error, gain_std_error: est.std_error, n })
}

/// Exact `E[V1]` by enumerating a finite-support model.
pub fn exhaustive_value_of_refinement(
    problem: &DecisionProblem,
    act: usize,
    model: &RefinementModel,
    criterion: Criterion,
) -> Result<RefinementGain, SingleError> {
    check_model(problem, act, model)?;
    let space = model.outcome_space().ok_or(SingleError::ExhaustiveUnavailable)?;
    let v0 = optimal_value(problem, criterion)?;
    let mut v1 = 0.0;
    for (p, outcome) in space.outcomes() {
        v1 += p * refined_value(problem, act, *outcome, criterion)?;
    }
    Ok(RefinementGain { v0, v1_mean: v1, std_error: 0.0, gain_std_error: 0.0, n: space.len() })
}

/// How a chain stage picks the act to refine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActSelection {
    Best,
    Index(usize),
}

/// One stage of a refinement chain. The template's `(u0, p0)` are replaced
/// by those of the selected act when the stage runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub select: ActSelection,
    pub template: RefinementModel,
}

impl Stage {
    pub fn best(template: RefinementModel) -> Self {
        Self { select: ActSelection::Best, template }
    }

    fn prepare(&self, problem: &DecisionProblem) -> Result<(usize, RefinementModel), SingleError> {
        let act = match self.select {
            ActSelection::Best => best_act(problem)?.0,
            ActSelection::Index(i) => i,
        };
        let model = self.template.rebased(problem.act_desirability(act)?, problem.act_probability(act)?);
        model.validate()?;
        Ok((act, model))
    }
}

fn run_path(
    problem: &DecisionProblem,
    schedule: &[Stage],
    stream: SubStream,
    index: u64,
    criterion: Criterion,
) -> Result<Vec<f64>, SingleError> {
    let mut current = problem.clone();
    let mut values = Vec::with_capacity(schedule.len() + 1);
    values.push(optimal_value(&current, criterion)?);
    for (k, stage) in schedule.iter().enumerate() {
        let (act, model) = stage.prepare(&current)?;
        let outcome = model.sample(&mut stream.child(k as u64).rng(index))?;
        current = current.refine_binary(&SplitSpec::new(act, outcome))?;
        values.push(optimal_value(&current, criterion)?);
    }
    Ok(values)
}

/// Simulates `n` independent refinement paths through `schedule`.
///
/// Stage `k` of path `i` draws from sub-stream `(child(k), i)` and refines the
/// problem realized by stage `k - 1` of the same path. Entry `k` of the
/// result compares `E[V_k]` with `E[V_{k+1}]`; its `gain_std_error` is the
/// standard error of the paired difference.
pub fn sequential_refinement<E: Executor>(
    problem: &DecisionProblem,
    schedule: &[Stage],
    n: usize,
    stream: SubStream,
    criterion: Criterion,
    exec: &E,
) -> Result<Vec<RefinementGain>, SingleError> {
    if n == 0 {
        return Err(SingleError::NoSamples);
    }
    let paths: Vec<Vec<f64>> = exec
        .map(n, |i| run_path(problem, schedule, stream, i as u64, criterion))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let column = |k: usize| -> Vec<f64> { paths.iter().map(|p| p[k]).collect() };
    let mut out = Vec::with_capacity(schedule.len());
    for k in 0..schedule.len() {
        let before = column(k);
        let after = Estimate::from_samples(&column(k + 1));
        let diffs: Vec<f64> = paths.iter().map(|p| p[k + 1] - p[k]).collect();
        out.push(RefinementGain {
            v0: pairwise_sum(&before) / n as f64,
            v1_mean: after.mean,
            std_error: after.std_error,
            gain_std_error: Estimate::from_samples(&diffs).std_error,
            n,
        });
    }
    Ok(out)
}

/// Exact `[V0, E[V1], ..., E[Vk]]` for a chain of finite-support stages.
pub fn exhaustive_chain(problem: &DecisionProblem, schedule: &[Stage], criterion: Criterion) -> Result<Vec<f64>, SingleError> {
    let mut acc = vec![0.0; schedule.len() + 1];
    walk_chain(problem, schedule, criterion, 1.0, 0, &mut acc)?;
    Ok(acc)
}

fn walk_chain(
    problem: &DecisionProblem,
    schedule: &[Stage],
    criterion: Criterion,
    weight: f64,
    depth: usize,
    acc: &mut [f64],
) -> Result<(), SingleError> {
    acc[depth] += weight * optimal_value(problem, criterion)?;
    let Some(stage) = schedule.get(depth) else {
        return Ok(());
    };
    let (act, model) = stage.prepare(problem)?;
    let space = model.outcome_space().ok_or(SingleError::ExhaustiveUnavailable)?;
    for (p, outcome) in space.outcomes() {
        let next = problem.refine_binary(&SplitSpec::new(act, *outcome))?;
        walk_chain(&next, schedule, criterion, weight * p, depth + 1, acc)?;
    }
    Ok(())
}

/// Expected marginal gains `Delta_0, Delta_1, ...` of successive refinements.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSequence {
    Values(Vec<f64>),
    /// `first * ratio^i`.
    Geometric { first: f64, ratio: f64 },
}

impl DeltaSequence {
    /// Strictly decreasing, nonnegative, finite.
    pub fn validate(&self) -> Result<(), SingleError> {
        match self {
            Self::Values(v) => {
                if v.is_empty() {
                    return Err(SingleError::NotVanishingReturns("empty sequence"));
                }
                if v.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return Err(SingleError::NotVanishingReturns("gains must be finite and nonnegative"));
                }
                if v.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(SingleError::NotVanishingReturns("gains must strictly decrease"));
                }
            }
            Self::Geometric { first, ratio } => {
                if !(first.is_finite() && *first > 0.0) {
                    return Err(SingleError::NotVanishingReturns("first gain must be positive"));
                }
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(SingleError::NotVanishingReturns("ratio must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }

    fn get(&self, i: usize) -> Option<f64> {
        match self {
            Self::Values(v) => v.get(i).copied(),
            Self::Geometric { first, ratio } => Some(first * libm::pow(*ratio, i as f64)),
        }
    }
}

/// Optimal number of refinements at a fixed cost per refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingPlan {
    /// Index of the last refinement performed; `None` means never refine.
    pub t_star: Option<usize>,
    pub net_gain: f64,
    /// `(Delta_i, Delta_i - cost)` for every examined step.
    pub per_step: Vec<(f64, f64)>,
    pub cost: f64,
}

impl StoppingPlan {
    /// Net gain of performing refinements `0..=t` (`None` = none).
    pub fn net_gain_at(&self, t: Option<usize>) -> f64 {
        match t {
            None => 0.0,
            Some(t) => {
                let deltas: Vec<f64> = self.per_step[..=t].iter().map(|s| s.0).collect();
                pairwise_sum(&deltas) - (t + 1) as f64 * self.cost
            }
        }
    }
}

/// Refine while the expected marginal gain covers the cost.
///
/// Returns `t_star = max { t : Delta_t >= cost }`, or never when
/// `cost > Delta_0`. The net gain is computed as `sum(Delta) - (t+1) * cost`.
pub fn optimal_stopping(deltas: &DeltaSequence, cost: f64) -> Result<StoppingPlan, SingleError> {
    deltas.validate()?;
    if !(cost.is_finite() && cost > 0.0) {
        return Err(SingleError::InvalidCost(cost));
    }
    let mut per_step = Vec::new();
    let mut t_star = None;
    let mut i = 0;
    while let Some(d) = deltas.get(i) {
        per_step.push((d, d - cost));
        if d < cost {
            break;
        }
        t_star = Some(i);
        i += 1;
    }
    let mut plan = StoppingPlan { t_star, net_gain: 0.0, per_step, cost };
    plan.net_gain = plan.net_gain_at(t_star);
    debug_assert!(plan.net_gain >= 0.0);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistSpec;
    use crate::stats::Sequential;

    fn two_act() -> DecisionProblem {
        DecisionProblem::from_acts(&[0.5, 0.5], &[0.0, -1.0]).unwrap()
    }

    #[test]
    fn best_act_argmax_and_ties() {
        let p = DecisionProblem::from_acts(&[0.2, 0.3, 0.5], &[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(best_act(&p).unwrap(), (1, 3.0));
        let p = DecisionProblem::from_acts(&[0.5, 0.5], &[2.0, 2.0]).unwrap();
        assert_eq!(best_act(&p).unwrap().0, 0);
        let p = DecisionProblem::from_acts(&[1.0], &[5.0]).unwrap();
        assert_eq!(best_act(&p).unwrap(), (0, 5.0));
    }

    #[test]
    fn degenerate_model_has_zero_gain() {
        let m = RefinementModel::new(0.0, 0.5, DistSpec::point(0.5), DistSpec::point(0.0));
        let g = value_of_refinement(&two_act(), 0, &m, 500, SubStream::new(1), Criterion::Utility, &Sequential).unwrap();
        assert_eq!(g.gain(), 0.0);
        assert_eq!(g.std_error, 0.0);
    }

    #[test]
    fn two_point_gain_is_one() {
        // both branches of delta = +-2 give max{1, -1, -1} = 1
        let m = RefinementModel::new(0.0, 0.5, DistSpec::point(0.5), DistSpec::pm(2.0));
        let g = exhaustive_value_of_refinement(&two_act(), 0, &m, Criterion::Utility).unwrap();
        assert_eq!((g.v0, g.v1_mean), (0.0, 1.0));
        let mc = value_of_refinement(&two_act(), 0, &m, 2000, SubStream::new(2), Criterion::Utility, &Sequential).unwrap();
        assert_eq!(mc.v1_mean, 1.0);
    }

    #[test]
    fn mismatched_model_is_rejected() {
        let m = RefinementModel::new(0.3, 0.5, DistSpec::point(0.5), DistSpec::pm(2.0));
        let err = value_of_refinement(&two_act(), 0, &m, 10, SubStream::new(1), Criterion::Utility, &Sequential);
        assert!(matches!(err, Err(SingleError::ModelMismatch { .. })));
    }

    #[test]
    fn probability_weighted_criterion() {
        // V0 = max{0.5 * 0, 0.5 * -1} = 0; after +-2 split: max{0.25 * 1, 0.25 * -1, 0.5 * -1} = 0.25
        let m = RefinementModel::new(0.0, 0.5, DistSpec::point(0.5), DistSpec::pm(2.0));
        let g = exhaustive_value_of_refinement(&two_act(), 0, &m, Criterion::ProbabilityWeighted).unwrap();
        assert_eq!((g.v0, g.v1_mean), (0.0, 0.25));
    }

    #[test]
    fn chain_of_one_matches_single_stage() {
        let m = RefinementModel::new(0.0, 0.5, DistSpec::point(0.5), DistSpec::uniform(-1.0, 1.0));
        let s = SubStream::new(4);
        let chain = sequential_refinement(&two_act(), &[Stage::best(m)], 300, s, Criterion::Utility, &Sequential).unwrap();
        let single = value_of_refinement(&two_act(), 0, &m, 300, s.child(0), Criterion::Utility, &Sequential).unwrap();
        assert_eq!(chain[0].v1_mean, single.v1_mean);
        assert_eq!(chain[0].v0, single.v0);
    }

    #[test]
    fn degenerate_chain_is_flat() {
        let m = RefinementModel::new(0.0, 0.5, DistSpec::point(0.5), DistSpec::point(0.0));
        let chain = sequential_refinement(&two_act(), &[Stage::best(m); 3], 100, SubStream::new(1), Criterion::Utility, &Sequential)
            .unwrap();
        assert!(chain.iter().all(|g| g.gain() == 0.0));
        assert_eq!(exhaustive_chain(&two_act(), &[Stage::best(m); 3], Criterion::Utility).unwrap(), [0.0; 4]);
    }

    #[test]
    fn stopping_rule_cases() {
        let plan = optimal_stopping(&DeltaSequence::Values(vec![1.0, 0.5, 0.25]), 0.3).unwrap();
        assert_eq!(plan.t_star, Some(1));
        assert_eq!(plan.net_gain, 0.9);
        let never = optimal_stopping(&DeltaSequence::Values(vec![1.0, 0.5]), 1.5).unwrap();
        assert_eq!(never.t_star, None);
        assert_eq!(never.net_gain, 0.0);
        let boundary = optimal_stopping(&DeltaSequence::Values(vec![1.0, 0.4]), 1.0).unwrap();
        assert_eq!(boundary.t_star, Some(0));
        assert_eq!(boundary.net_gain, 0.0);
    }

    #[test]
    fn stopping_validates_inputs() {
        let flat = optimal_stopping(&DeltaSequence::Values(vec![1.0, 1.0]), 0.5);
        assert!(matches!(flat, Err(SingleError::NotVanishingReturns(_))));
        let neg = optimal_stopping(&DeltaSequence::Values(vec![1.0, -0.1]), 0.5);
        assert!(matches!(neg, Err(SingleError::NotVanishingReturns(_))));
        assert!(matches!(optimal_stopping(&DeltaSequence::Values(vec![1.0]), 0.0), Err(SingleError::InvalidCost(_))));
    }

    #[test]
    fn geometric_deltas_stop() {
        // 1, 0.5, 0.25, 0.125: last >= 0.2 is index 2
        let plan = optimal_stopping(&DeltaSequence::Geometric { first: 1.0, ratio: 0.5 }, 0.2).unwrap();
        assert_eq!(plan.t_star, Some(2));
        assert_eq!(plan.per_step.len(), 4);
        assert!((plan.net_gain - (1.75 - 0.6)).abs() < 1e-15);
    }
}
