//! Finite decision problems: atoms, propositions, act partitions, and the
//! refinement operation that splits an act while renormalizing credence.
//!
//! A [`DecisionProblem`] stores credence and desirability per atom. The
//! desirability of a larger proposition is the credence-weighted average of
//! its atoms, which is the only extension compatible with Jeffrey's
//! averaging rule. Refining an act replaces its atoms with one fresh atom per
//! branch, so the atom set grows as the agent refines.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::refinement::RefinementOutcome;
use crate::MASS_TOL;

/// Credences passed to [`DecisionProblem::new`] may miss unit mass by this much.
pub const INPUT_MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("act groups overlap at atom index {0}")]
    OverlappingActs(usize),
    #[error("act groups do not cover atom index {0}")]
    IncompleteCover(usize),
    #[error("negative credence {value} at atom index {index}")]
    NegativeCredence { index: usize, value: f64 },
    #[error("length mismatch: {0}")]
    LengthMismatch(&'static str),
    #[error("credences sum to {0}, expected 1")]
    MassMismatch(f64),
    #[error("act groups reference atom index {0} which does not exist")]
    IndexOutOfRange(usize),
    #[error("act {0} is empty")]
    EmptyAct(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unknown atom {0:?}")]
    UnknownAtom(AtomId),
    #[error("desirability of the empty proposition is undefined")]
    BottomProposition,
    #[error("desirability undefined for a proposition of probability zero")]
    NullProbability,
    #[error("act index {index} out of range for {acts} acts")]
    InvalidTarget { index: usize, acts: usize },
    #[error("refinement branch masses must be positive with total in (0, 1), got {p1} + {p2}")]
    OutcomeMassOutOfRange { p1: f64, p2: f64 },
    #[error("mass {0} outside (0, 1)")]
    MassOutOfRange(f64),
    #[error("k-ary refinement needs at least two branches, got {0}")]
    TooFewBranches(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub u64);

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub id: AtomId,
    pub label: String,
}

/// A set of atoms. The empty set is the contradiction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Proposition {
    pub atoms: BTreeSet<AtomId>,
}

impl Proposition {
    pub fn bottom() -> Self {
        Self::default()
    }

    pub fn is_bottom(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn join(&self, other: &Self) -> Self {
        Self { atoms: self.atoms.union(&other.atoms).copied().collect() }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.atoms.is_disjoint(&other.atoms)
    }
}

impl FromIterator<AtomId> for Proposition {
    fn from_iter<I: IntoIterator<Item = AtomId>>(iter: I) -> Self {
        Self { atoms: iter.into_iter().collect() }
    }
}

/// Ordered list of pairwise-disjoint, nonempty acts covering every atom.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActPartition {
    pub acts: Vec<Proposition>,
}

impl ActPartition {
    pub fn len(&self) -> usize {
        self.acts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acts.is_empty()
    }
}

/// Which act of a problem to split and how it splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub target: usize,
    pub outcome: RefinementOutcome,
    pub labels: (String, String),
}

impl SplitSpec {
    pub fn new(target: usize, outcome: RefinementOutcome) -> Self {
        Self { target, outcome, labels: (String::from("B1"), String::from("B2")) }
    }
}

/// A finite decision problem with per-atom credence and desirability.
///
/// Atoms are kept sorted by id; fresh atoms always get the next id.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProblem {
    atoms: Vec<Atom>,
    credence: Vec<f64>,
    desirability: Vec<f64>,
    acts: ActPartition,
    next_id: u64,
}

impl DecisionProblem {
    /// Builds and validates a problem. Credences within `1e-9` of unit mass
    /// are renormalized to sum to exactly one (up to rounding).
    pub fn new<S: AsRef<str>>(
        labels: &[S],
        act_groups: &[Vec<usize>],
        credence: &[f64],
        desirability: &[f64],
    ) -> Result<Self, AlgebraError> {
        let n = labels.len();
        if credence.len() != n {
            return Err(AlgebraError::LengthMismatch("credence"));
        }
        if desirability.len() != n {
            return Err(AlgebraError::LengthMismatch("desirability"));
        }
        if n == 0 {
            return Err(AlgebraError::LengthMismatch("no atoms"));
        }
        if credence.iter().any(|p| !p.is_finite()) {
            return Err(AlgebraError::NonFinite("credence"));
        }
        if desirability.iter().any(|u| !u.is_finite()) {
            return Err(AlgebraError::NonFinite("desirability"));
        }
        if let Some((index, &value)) = credence.iter().enumerate().find(|(_, p)| **p < 0.0) {
            return Err(AlgebraError::NegativeCredence { index, value });
        }
        let mut owner = alloc::vec![None; n];
        for (g, group) in act_groups.iter().enumerate() {
            if group.is_empty() {
                return Err(AlgebraError::EmptyAct(g));
            }
            for &i in group {
                if i >= n {
                    return Err(AlgebraError::IndexOutOfRange(i));
                }
                if owner[i].is_some() {
                    return Err(AlgebraError::OverlappingActs(i));
                }
                owner[i] = Some(g);
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(AlgebraError::IncompleteCover(i));
        }
        let total: f64 = credence.iter().sum();
        if (total - 1.0).abs() > INPUT_MASS_TOL {
            return Err(AlgebraError::MassMismatch(total));
        }
        let atoms: Vec<Atom> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| Atom { id: AtomId(i as u64), label: l.as_ref().to_string() })
            .collect();
        let acts = act_groups
            .iter()
            .map(|g| g.iter().map(|&i| AtomId(i as u64)).collect())
            .collect();
        Ok(Self {
            atoms,
            credence: credence.iter().map(|p| p / total).collect(),
            desirability: desirability.to_vec(),
            acts: ActPartition { acts },
            next_id: n as u64,
        })
    }

    /// One atom per act.
    pub fn from_acts(credence: &[f64], desirability: &[f64]) -> Result<Self, AlgebraError> {
        let labels: Vec<String> = (0..credence.len()).map(|i| alloc::format!("a{i}")).collect();
        let groups: Vec<Vec<usize>> = (0..credence.len()).map(|i| alloc::vec![i]).collect();
        Self::new(&labels, &groups, credence, desirability)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn acts(&self) -> &ActPartition {
        &self.acts
    }

    pub fn act_count(&self) -> usize {
        self.acts.len()
    }

    pub fn credence_of(&self, id: AtomId) -> Result<f64, AlgebraError> {
        self.index_of(id).map(|i| self.credence[i])
    }

    pub fn desirability_of(&self, id: AtomId) -> Result<f64, AlgebraError> {
        self.index_of(id).map(|i| self.desirability[i])
    }

    /// Credences in atom order.
    pub fn credences(&self) -> &[f64] {
        &self.credence
    }

    /// Desirabilities in atom order.
    pub fn desirabilities(&self) -> &[f64] {
        &self.desirability
    }

    pub fn total_mass(&self) -> f64 {
        self.credence.iter().sum()
    }

    /// Index of an atom in [`Self::atoms`].
    pub fn index_of(&self, id: AtomId) -> Result<usize, AlgebraError> {
        self.atoms.binary_search_by_key(&id, |a| a.id).map_err(|_| AlgebraError::UnknownAtom(id))
    }

    /// The tautology: every atom.
    pub fn top(&self) -> Proposition {
        self.atoms.iter().map(|a| a.id).collect()
    }

    pub fn probability(&self, x: &Proposition) -> Result<f64, AlgebraError> {
        let mut p = 0.0;
        for &id in &x.atoms {
            p += self.credence[self.index_of(id)?];
        }
        Ok(p)
    }

    /// Credence-weighted average desirability over `x`.
    pub fn desirability(&self, x: &Proposition) -> Result<f64, AlgebraError> {
        if x.is_bottom() {
            return Err(AlgebraError::BottomProposition);
        }
        let (mut mass, mut weighted) = (0.0, 0.0);
        for &id in &x.atoms {
            let i = self.index_of(id)?;
            mass += self.credence[i];
            weighted += self.credence[i] * self.desirability[i];
        }
        if mass <= 0.0 {
            return Err(AlgebraError::NullProbability);
        }
        if x.atoms.len() == 1 {
            // single atom: exact, no division rounding
            let id = *x.atoms.first().expect("nonempty");
            return Ok(self.desirability[self.index_of(id)?]);
        }
        Ok(weighted / mass)
    }

    pub fn act_probability(&self, act: usize) -> Result<f64, AlgebraError> {
        self.probability(self.act(act)?)
    }

    pub fn act_desirability(&self, act: usize) -> Result<f64, AlgebraError> {
        self.desirability(self.act(act)?)
    }

    pub fn act(&self, act: usize) -> Result<&Proposition, AlgebraError> {
        self.acts.acts.get(act).ok_or(AlgebraError::InvalidTarget { index: act, acts: self.acts.len() })
    }

    /// Splits act `spec.target` into two acts backed by fresh atoms.
    ///
    /// The branches land at positions `target` and `target + 1`. Every other
    /// credence is divided by `Z = 1 - P(A) + p1 + p2`.
    pub fn refine_binary(&self, spec: &SplitSpec) -> Result<Self, AlgebraError> {
        let o = &spec.outcome;
        self.refine_into(
            spec.target,
            &[(o.u1, o.p1), (o.u2, o.p2)],
            &[spec.labels.0.as_str(), spec.labels.1.as_str()],
        )
    }

    /// Splits act `target` into `k >= 2` branches `(u_i, p_i)` in one step.
    pub fn refine_kary<S: AsRef<str>>(
        &self,
        target: usize,
        branches: &[(f64, f64)],
        labels: &[S],
    ) -> Result<Self, AlgebraError> {
        if branches.len() < 2 {
            return Err(AlgebraError::TooFewBranches(branches.len()));
        }
        if labels.len() != branches.len() {
            return Err(AlgebraError::LengthMismatch("labels"));
        }
        let labels: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
        self.refine_into(target, branches, &labels)
    }

    fn refine_into(&self, target: usize, branches: &[(f64, f64)], labels: &[&str]) -> Result<Self, AlgebraError> {
        let act = self.act(target)?;
        if act.is_bottom() {
            return Err(AlgebraError::EmptyAct(target));
        }
        let branch_mass: f64 = branches.iter().map(|b| b.1).sum();
        let bad_mass = branches.iter().any(|b| !(b.1 > 0.0)) || !(branch_mass > 0.0 && branch_mass < 1.0);
        if bad_mass {
            let (p1, p2) = (branches[0].1, branches[1..].iter().map(|b| b.1).sum());
            return Err(AlgebraError::OutcomeMassOutOfRange { p1, p2 });
        }
        if branches.iter().any(|b| !b.0.is_finite()) {
            return Err(AlgebraError::NonFinite("branch utility"));
        }

        let mut atoms = Vec::with_capacity(self.atoms.len() + branches.len());
        let mut credence = Vec::with_capacity(atoms.capacity());
        let mut desirability = Vec::with_capacity(atoms.capacity());
        let mut rest = 0.0;
        for (i, atom) in self.atoms.iter().enumerate() {
            if act.atoms.contains(&atom.id) {
                continue;
            }
            rest += self.credence[i];
            atoms.push(atom.clone());
            credence.push(self.credence[i]);
            desirability.push(self.desirability[i]);
        }
        let z = rest + branch_mass;
        for c in &mut credence {
            *c /= z;
        }

        let mut next_id = self.next_id;
        let mut fresh = Vec::with_capacity(branches.len());
        for (&(u, p), label) in branches.iter().zip(labels) {
            let id = AtomId(next_id);
            next_id += 1;
            atoms.push(Atom { id, label: (*label).to_string() });
            credence.push(p / z);
            desirability.push(u);
            fresh.push(Proposition { atoms: core::iter::once(id).collect() });
        }

        let mut acts = self.acts.acts.clone();
        acts.splice(target..=target, fresh);
        Ok(Self { atoms, credence, desirability, acts: ActPartition { acts }, next_id })
    }

    /// Appends a catch-all act of the given mass; prior credences scale by `1 - mass`.
    pub fn add_catch_all(&self, mass: f64, desirability: f64) -> Result<Self, AlgebraError> {
        if !(mass > 0.0 && mass < 1.0) {
            return Err(AlgebraError::MassOutOfRange(mass));
        }
        if !desirability.is_finite() {
            return Err(AlgebraError::NonFinite("catch-all desirability"));
        }
        let mut out = self.clone();
        for c in &mut out.credence {
            *c *= 1.0 - mass;
        }
        let id = AtomId(out.next_id);
        out.next_id += 1;
        out.atoms.push(Atom { id, label: String::from("catch-all") });
        out.credence.push(mass);
        out.desirability.push(desirability);
        out.acts.acts.push(core::iter::once(id).collect());
        Ok(out)
    }

    /// Re-checks the partition and unit-mass invariants.
    pub fn check_invariants(&self) -> Result<(), AlgebraError> {
        let mut seen = BTreeSet::new();
        for (g, act) in self.acts.acts.iter().enumerate() {
            if act.is_bottom() {
                return Err(AlgebraError::EmptyAct(g));
            }
            for &id in &act.atoms {
                let i = self.index_of(id)?;
                if !seen.insert(id) {
                    return Err(AlgebraError::OverlappingActs(i));
                }
            }
        }
        if let Some(i) = self.atoms.iter().position(|a| !seen.contains(&a.id)) {
            return Err(AlgebraError::IncompleteCover(i));
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(AlgebraError::MassMismatch(total));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn outcome(u1: f64, u2: f64, p1: f64, p2: f64) -> RefinementOutcome {
        RefinementOutcome { u1, u2, p1, p2 }
    }

    fn coin() -> DecisionProblem {
        DecisionProblem::new(&["a", "b"], &[vec![0], vec![1]], &[0.5, 0.5], &[1.0, -1.0]).unwrap()
    }

    #[test]
    fn make_problem_validates() {
        assert_eq!(coin().act_count(), 2);
        let overlap = DecisionProblem::new(&["a", "b"], &[vec![0], vec![0, 1]], &[0.5, 0.5], &[1.0, -1.0]);
        assert_eq!(overlap.unwrap_err(), AlgebraError::OverlappingActs(0));
        let short = DecisionProblem::new(&["a", "b"], &[vec![0], vec![1]], &[0.3, 0.3], &[1.0, -1.0]);
        assert!(matches!(short.unwrap_err(), AlgebraError::MassMismatch(m) if (m - 0.6).abs() < 1e-12));
        let uncovered = DecisionProblem::new(&["a", "b"], &[vec![0]], &[0.5, 0.5], &[1.0, -1.0]);
        assert_eq!(uncovered.unwrap_err(), AlgebraError::IncompleteCover(1));
        let negative = DecisionProblem::new(&["a", "b"], &[vec![0], vec![1]], &[1.5, -0.5], &[1.0, -1.0]);
        assert!(matches!(negative.unwrap_err(), AlgebraError::NegativeCredence { index: 1, .. }));
        let lengths = DecisionProblem::new(&["a", "b"], &[vec![0], vec![1]], &[1.0], &[1.0, -1.0]);
        assert_eq!(lengths.unwrap_err(), AlgebraError::LengthMismatch("credence"));
    }

    #[test]
    fn near_unit_mass_is_renormalized() {
        let p = DecisionProblem::from_acts(&[0.5 + 4e-10, 0.5], &[0.0, 0.0]).unwrap();
        assert!((p.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probability_readback() {
        let p = DecisionProblem::from_acts(&[0.3, 0.7], &[0.0, 0.0]).unwrap();
        assert!((p.probability(&p.top()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(p.probability(&Proposition::bottom()).unwrap(), 0.0);
        assert_eq!(p.probability(p.act(0).unwrap()).unwrap(), 0.3);
        let stray: Proposition = [AtomId(99)].into_iter().collect();
        assert_eq!(p.probability(&stray).unwrap_err(), AlgebraError::UnknownAtom(AtomId(99)));
    }

    #[test]
    fn desirability_is_weighted_average() {
        let p = DecisionProblem::from_acts(&[0.5, 0.5], &[4.0, 0.0]).unwrap();
        assert_eq!(p.act_desirability(0).unwrap(), 4.0);
        let p = DecisionProblem::from_acts(&[0.5, 0.5], &[2.0, 0.0]).unwrap();
        assert_eq!(p.desirability(&p.top()).unwrap(), 1.0);
        // 0.25 * 4 + 0.75 * 0 = 1
        let p = DecisionProblem::from_acts(&[0.25, 0.75], &[4.0, 0.0]).unwrap();
        assert_eq!(p.desirability(&p.top()).unwrap(), 1.0);
        assert_eq!(p.desirability(&Proposition::bottom()).unwrap_err(), AlgebraError::BottomProposition);
        let z = DecisionProblem::from_acts(&[1.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(z.act_desirability(1).unwrap_err(), AlgebraError::NullProbability);
    }

    #[test]
    fn mass_preserving_split() {
        let p = DecisionProblem::from_acts(&[0.5, 0.5], &[1.0, 3.0]).unwrap();
        let r = p.refine_binary(&SplitSpec::new(0, outcome(2.0, 0.0, 0.25, 0.25))).unwrap();
        assert_eq!(r.act_count(), 3);
        assert_eq!(r.act_probability(0).unwrap(), 0.25);
        assert_eq!(r.act_probability(1).unwrap(), 0.25);
        assert_eq!(r.act_probability(2).unwrap(), 0.5);
        assert_eq!(r.act_desirability(0).unwrap(), 2.0);
        assert_eq!(r.act_desirability(1).unwrap(), 0.0);
        assert_eq!(r.act_desirability(2).unwrap(), 3.0);
        r.check_invariants().unwrap();
    }

    #[test]
    fn split_with_mass_gain_renormalizes() {
        // Z = 1 - 0.5 + 0.3 + 0.3 = 1.1
        let p = DecisionProblem::from_acts(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        let r = p.refine_binary(&SplitSpec::new(0, outcome(1.0, 1.0, 0.3, 0.3))).unwrap();
        assert!((r.act_probability(0).unwrap() - 0.3 / 1.1).abs() < 1e-15);
        assert!((r.act_probability(1).unwrap() - 0.3 / 1.1).abs() < 1e-15);
        assert!((r.act_probability(2).unwrap() - 0.5 / 1.1).abs() < 1e-15);
        assert!((r.total_mass() - 1.0).abs() < MASS_TOL);
    }

    #[test]
    fn split_rejects_bad_mass_and_target() {
        let p = coin();
        let err = p.refine_binary(&SplitSpec::new(0, outcome(1.0, 1.0, 0.6, 0.6))).unwrap_err();
        assert!(matches!(err, AlgebraError::OutcomeMassOutOfRange { .. }));
        let err = p.refine_binary(&SplitSpec::new(5, outcome(1.0, 1.0, 0.2, 0.2))).unwrap_err();
        assert_eq!(err, AlgebraError::InvalidTarget { index: 5, acts: 2 });
    }

    #[test]
    fn kary_equal_thirds() {
        let p = DecisionProblem::from_acts(&[0.6, 0.4], &[2.0, 0.0]).unwrap();
        let r = p.refine_kary(0, &[(1.0, 0.2), (2.0, 0.2), (3.0, 0.2)], &["x", "y", "z"]).unwrap();
        assert_eq!(r.act_count(), 4);
        for i in 0..3 {
            assert!((r.act_probability(i).unwrap() - 0.2).abs() < 1e-15);
            assert_eq!(r.act_desirability(i).unwrap(), (i + 1) as f64);
        }
        assert!(matches!(p.refine_kary(0, &[(1.0, 0.2)], &["x"]), Err(AlgebraError::TooFewBranches(1))));
    }

    #[test]
    fn kary_with_two_branches_is_binary() {
        let p = coin();
        let o = outcome(3.0, -2.0, 0.2, 0.4);
        let a = p.refine_kary(1, &[(o.u1, o.p1), (o.u2, o.p2)], &["B1", "B2"]).unwrap();
        let b = p.refine_binary(&SplitSpec::new(1, o)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn catch_all_rescales_and_refines() {
        let p = coin();
        assert_eq!(p.add_catch_all(0.0, 0.0).unwrap_err(), AlgebraError::MassOutOfRange(0.0));
        let c = p.add_catch_all(0.1, 5.0).unwrap();
        assert_eq!(c.act_count(), 3);
        assert!((c.act_probability(0).unwrap() - 0.45).abs() < 1e-15);
        assert!((c.act_probability(2).unwrap() - 0.1).abs() < 1e-15);
        c.check_invariants().unwrap();
        let r = c.refine_binary(&SplitSpec::new(2, outcome(6.0, 4.0, 0.05, 0.05))).unwrap();
        assert_eq!(r.act_count(), 4);
        r.check_invariants().unwrap();
    }
}
