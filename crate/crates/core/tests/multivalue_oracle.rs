use proptest::prelude::*;
use refinery_core::multivalue::{
    aggregate_utility, classify, exhaustive_resolution_probability, multi_value_dominates, resolution_probability, Coupling,
    JointOutcome, JointRefinementModel, Resolution, ValueProfile,
};
use refinery_core::{DistSpec, Sequential, SubStream};

const A: [f64; 2] = [2.0, 0.0];
const NOT_A: [f64; 2] = [1.0, 1.0];
const OFFSETS: [f64; 2] = [1.0, 4.0];
// pattern bit i set means dimension i moves up: (-,-), (+,-), (-,+), (+,+)
const PMF: [f64; 4] = [0.0, 0.25, 0.5, 0.25];

fn profile() -> ValueProfile {
    ValueProfile::from_act_values(&[A.to_vec(), NOT_A.to_vec()]).unwrap()
}

fn explicit_joint() -> JointRefinementModel {
    JointRefinementModel::two_point_joint(DistSpec::point(0.5), &OFFSETS, &PMF).unwrap()
}

/// Weak dominance on both coordinates with one strict, written out directly.
fn dominates2(c: [f64; 2], others: &[[f64; 2]]) -> bool {
    let weak = others.iter().all(|o| c[0] >= o[0] && c[1] >= o[1]);
    let strict = (0..2).any(|i| others.iter().all(|o| c[i] > o[i]));
    weak && strict
}

fn hand_resolution(q: f64, d: [f64; 2]) -> bool {
    let b1 = [A[0] + (1.0 - q) * d[0], A[1] + (1.0 - q) * d[1]];
    let b2 = [A[0] - q * d[0], A[1] - q * d[1]];
    dominates2(b1, &[NOT_A, b2]) || dominates2(b2, &[NOT_A, b1])
}

#[test]
fn explicit_joint_resolves_with_probability_one_quarter() {
    let mut oracle = 0.0;
    for (pattern, p) in PMF.iter().enumerate() {
        let d = [0, 1].map(|i| if pattern & (1 << i) != 0 { OFFSETS[i] } else { -OFFSETS[i] });
        if hand_resolution(0.5, d) {
            oracle += p;
        }
    }
    assert_eq!(oracle, 0.25);
    let exact = exhaustive_resolution_probability(&profile(), 0, 1, &explicit_joint()).unwrap();
    assert_eq!(exact.prob.mean, 0.25);
    assert_eq!(exact.overlaps, 0);
    let mc = resolution_probability(&profile(), 0, 1, &explicit_joint(), 100_000, SubStream::new(13), &Sequential).unwrap();
    assert!(mc.prob.agrees_with(0.25, 4.0, 0.0), "{:?}", mc.prob);
    assert_eq!(mc.overlaps, 0);
}

#[test]
fn independent_wide_uniform_matches_grid_oracle() {
    let joint = JointRefinementModel {
        q: DistSpec::point(0.5),
        marginals: vec![DistSpec::uniform(-4.0, 4.0); 2],
        coupling: Coupling::Independent,
    };
    let m = 1000;
    let mut hits = 0usize;
    for i in 0..m {
        for j in 0..m {
            let d = [-4.0 + 8.0 * (i as f64 + 0.5) / m as f64, -4.0 + 8.0 * (j as f64 + 0.5) / m as f64];
            hits += hand_resolution(0.5, d) as usize;
        }
    }
    let grid = hits as f64 / (m * m) as f64;
    let mc = resolution_probability(&profile(), 0, 1, &joint, 100_000, SubStream::new(17), &Sequential).unwrap();
    assert!(mc.prob.mean - 2.576 * mc.prob.std_error > 0.0);
    assert!((mc.prob.mean - grid).abs() <= 4.0 * mc.prob.std_error + 8.0 / m as f64, "{:?} vs {grid}", mc.prob);
    assert_eq!(mc.overlaps, 0);
}

#[test]
fn spread_free_model_never_resolves() {
    let joint = JointRefinementModel {
        q: DistSpec::uniform(0.1, 0.9),
        marginals: vec![DistSpec::point(0.0); 2],
        coupling: Coupling::Independent,
    };
    let mc = resolution_probability(&profile(), 0, 1, &joint, 5_000, SubStream::new(2), &Sequential).unwrap();
    assert_eq!(mc.prob.mean, 0.0);
}

/// Count of grid weights where `c` falls below a rival, and whether it wins
/// strictly at some weight.
fn simplex_violations(c: &[f64], others: &[Vec<f64>]) -> (usize, bool) {
    let mut violations = 0;
    let mut strict = false;
    for k in 0..=100 {
        let w = k as f64 / 100.0;
        let weights = [1.0 - w, w];
        let uc = aggregate_utility(c, &weights).unwrap();
        for o in others {
            let uo = aggregate_utility(o, &weights).unwrap();
            if uc < uo {
                violations += 1;
            }
            strict |= uc > uo;
        }
    }
    (violations, strict)
}

#[test]
fn dominating_branch_wins_on_the_whole_simplex_grid() {
    let o = JointOutcome { q: 0.5, branch1: vec![2.5, 2.0], branch2: vec![1.5, -2.0] };
    assert_eq!(classify(&o, &NOT_A), Resolution::First);
    let (violations, strict) = simplex_violations(&o.branch1, &[NOT_A.to_vec(), o.branch2.clone()]);
    assert_eq!(violations, 0);
    assert!(strict);
}

proptest! {
    #[test]
    fn dominance_implies_argmax_invariance(
        others in prop::collection::vec(prop::array::uniform2(-5.0..5.0f64), 1..5),
        lift in prop::array::uniform2(0.0..2.0f64),
        strict_dim in 0usize..2,
        bump in 0.01..1.0f64,
    ) {
        let mut c = [0, 1].map(|i| others.iter().map(|o| o[i]).fold(f64::NEG_INFINITY, f64::max) + lift[i]);
        c[strict_dim] += bump;
        let rivals: Vec<Vec<f64>> = others.iter().map(|o| o.to_vec()).collect();
        let refs: Vec<&[f64]> = rivals.iter().map(|v| v.as_slice()).collect();
        prop_assert!(multi_value_dominates(&c, &refs));
        let (violations, strict) = simplex_violations(&c, &rivals);
        prop_assert_eq!(violations, 0);
        prop_assert!(strict);
    }
}
