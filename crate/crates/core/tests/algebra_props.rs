use proptest::prelude::*;
use refinery_core::algebra::{DecisionProblem, Proposition, SplitSpec};
use refinery_core::RefinementOutcome;

#[derive(Debug, Clone)]
enum Op {
    Binary { act: usize, u: (f64, f64), share: f64, mass: f64 },
    Kary { act: usize, branches: Vec<(f64, f64)>, mass: f64 },
    CatchAll { mass: f64, u: f64 },
}

fn problem_strategy() -> impl Strategy<Value = DecisionProblem> {
    (1usize..6).prop_flat_map(|acts| {
        (prop::collection::vec(0.05..1.0f64, acts), prop::collection::vec(-5.0..5.0f64, acts))
            .prop_map(|(w, u)| {
                let total: f64 = w.iter().sum();
                let p: Vec<f64> = w.iter().map(|x| x / total).collect();
                DecisionProblem::from_acts(&p, &u).unwrap()
            })
    })
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0usize..64, (-5.0..5.0f64, -5.0..5.0f64), 0.05..0.95f64, 0.05..0.95f64)
            .prop_map(|(act, u, share, mass)| Op::Binary { act, u, share, mass }),
        (0usize..64, prop::collection::vec((-5.0..5.0f64, 0.05..1.0f64), 2..6), 0.05..0.95f64)
            .prop_map(|(act, branches, mass)| Op::Kary { act, branches, mass }),
        (0.01..0.5f64, -5.0..5.0f64).prop_map(|(mass, u)| Op::CatchAll { mass, u }),
    ]
}

/// Applies `op`; branch masses are fractions of the total `mass` in `(0, 1)`.
fn apply(p: &DecisionProblem, op: &Op) -> DecisionProblem {
    match op {
        Op::Binary { act, u, share, mass } => {
            let o = RefinementOutcome { u1: u.0, u2: u.1, p1: share * mass, p2: (1.0 - share) * mass };
            p.refine_binary(&SplitSpec::new(act % p.act_count(), o)).unwrap()
        }
        Op::Kary { act, branches, mass } => {
            let total: f64 = branches.iter().map(|b| b.1).sum();
            let scaled: Vec<(f64, f64)> = branches.iter().map(|&(u, w)| (u, mass * w / total)).collect();
            let labels: Vec<String> = (0..scaled.len()).map(|i| format!("k{i}")).collect();
            p.refine_kary(act % p.act_count(), &scaled, &labels).unwrap()
        }
        Op::CatchAll { mass, u } => p.add_catch_all(*mass, *u).unwrap(),
    }
}

fn expected_acts(p: &DecisionProblem, op: &Op) -> usize {
    match op {
        Op::Binary { .. } | Op::CatchAll { .. } => p.act_count() + 1,
        Op::Kary { branches, .. } => p.act_count() + branches.len() - 1,
    }
}

/// The explicit chain: step `j` splits the residual into branch `j` and the
/// remaining branches. The first step carries the full mass change; later
/// steps preserve mass.
fn binary_chain(p: &DecisionProblem, target: usize, branches: &[(f64, f64)], labels: &[String]) -> DecisionProblem {
    let k = branches.len();
    let total: f64 = branches.iter().map(|b| b.1).sum();
    let z = 1.0 - p.act_probability(target).unwrap() + total;
    let mut cur = p.clone();
    let mut rest_mass = total;
    for j in 0..k - 1 {
        let (u, m) = branches[j];
        let tail = &branches[j + 1..];
        let tail_mass: f64 = tail.iter().map(|b| b.1).sum();
        let tail_u = tail.iter().map(|b| b.0 * b.1).sum::<f64>() / tail_mass;
        let scale = if j == 0 { 1.0 } else { 1.0 / z };
        let o = RefinementOutcome { u1: u, u2: tail_u, p1: m * scale, p2: tail_mass * scale };
        let second = if j == k - 2 { labels[k - 1].clone() } else { format!("residual{j}") };
        let spec = SplitSpec { target: target + j, outcome: o, labels: (labels[j].clone(), second) };
        cur = cur.refine_binary(&spec).unwrap();
        rest_mass -= m;
    }
    let _ = rest_mass;
    cur
}

fn triples(p: &DecisionProblem) -> Vec<(String, f64, f64)> {
    let mut out: Vec<(String, f64, f64)> = (0..p.act_count())
        .map(|a| {
            let act = p.act(a).unwrap();
            let names: Vec<String> = act
                .atoms
                .iter()
                .map(|id| p.atoms()[p.index_of(*id).unwrap()].label.clone())
                .collect();
            (names.join("+"), p.act_probability(a).unwrap(), p.act_desirability(a).unwrap())
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn operation_sequences_keep_invariants(p in problem_strategy(), ops in prop::collection::vec(op_strategy(), 1..10)) {
        let mut cur = p;
        for op in &ops {
            let want = expected_acts(&cur, op);
            cur = apply(&cur, op);
            cur.check_invariants().unwrap();
            prop_assert!((cur.total_mass() - 1.0).abs() <= 1e-12);
            prop_assert_eq!(cur.act_count(), want);
        }
    }

    #[test]
    fn kary_matches_binary_chain(
        p in problem_strategy(),
        act in 0usize..8,
        branches in prop::collection::vec((-5.0..5.0f64, 0.05..1.0f64), 2..=6),
        mass in 0.05..0.95f64,
    ) {
        let target = act % p.act_count();
        let total: f64 = branches.iter().map(|b| b.1).sum();
        let scaled: Vec<(f64, f64)> = branches.iter().map(|&(u, w)| (u, mass * w / total)).collect();
        let labels: Vec<String> = (0..scaled.len()).map(|i| format!("b{i}")).collect();
        let direct = triples(&p.refine_kary(target, &scaled, &labels).unwrap());
        let chain = triples(&binary_chain(&p, target, &scaled, &labels));
        prop_assert_eq!(direct.len(), chain.len());
        for (d, c) in direct.iter().zip(&chain) {
            prop_assert_eq!(&d.0, &c.0);
            prop_assert!((d.1 - c.1).abs() <= 1e-12, "{:?} vs {:?}", d, c);
            prop_assert!((d.2 - c.2).abs() <= 1e-12, "{:?} vs {:?}", d, c);
        }
    }

    #[test]
    fn probability_is_additive_and_desirability_averages(p in problem_strategy(), split in 0u64..64) {
        let top = p.top();
        let (x, y): (Vec<_>, Vec<_>) = top.atoms.iter().enumerate().partition(|(i, _)| split & (1 << (i % 6)) != 0);
        let x: Proposition = x.into_iter().map(|(_, id)| *id).collect();
        let y: Proposition = y.into_iter().map(|(_, id)| *id).collect();
        let (px, py) = (p.probability(&x).unwrap(), p.probability(&y).unwrap());
        prop_assert!((px + py - p.probability(&x.join(&y)).unwrap()).abs() <= 1e-12);
        if px > 0.0 && py > 0.0 {
            let (ux, uy) = (p.desirability(&x).unwrap(), p.desirability(&y).unwrap());
            let joint = p.desirability(&x.join(&y)).unwrap();
            prop_assert!((joint - (px * ux + py * uy) / (px + py)).abs() <= 1e-9);
        }
    }
}

#[test]
fn catch_all_rescales_and_refines() {
    let p = DecisionProblem::from_acts(&[0.4, 0.6], &[1.0, 2.0]).unwrap();
    let q = p.add_catch_all(0.1, 0.0).unwrap();
    assert_eq!(q.act_count(), 3);
    assert!((q.act_probability(0).unwrap() - 0.36).abs() < 1e-15);
    assert!((q.act_probability(1).unwrap() - 0.54).abs() < 1e-15);
    let o = RefinementOutcome { u1: 3.0, u2: -1.0, p1: 0.05, p2: 0.05 };
    let r = q.refine_binary(&SplitSpec::new(2, o)).unwrap();
    assert_eq!(r.act_count(), 4);
    r.check_invariants().unwrap();
}
