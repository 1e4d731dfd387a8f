//! Value refinement for finite Jeffrey-Bolker decision problems.
//!
//! The crate models an agent who can split a coarse act into finer acts and
//! asks what that is worth: for a single agent (expected best value before
//! and after refinement, with a fixed-cost stopping rule), for an agent torn
//! between value dimensions (can refinement reveal a dominating act), in
//! 2x2 zero-sum games (does unilateral refinement open up positive-sum
//! equilibria), and in Nash bargaining (does splitting a one-dimensional
//! resource into two dimensions Pareto-improve the bargain).
//!
//! Everything here is `no_std` with `alloc`. Monte Carlo estimators are
//! generic over an [`Executor`], so a caller with threads can evaluate
//! samples in parallel; every sample draws from its own sub-stream derived
//! from `(seed, index)` and sums are reduced with a fixed pairwise tree, so
//! results do not depend on the worker count.

#![no_std]
// NaN must fail range checks, so they are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod algebra;
pub mod bargaining;
pub mod dist;
pub mod games;
mod linalg;
pub mod multivalue;
pub mod oracles;
pub mod refinement;
pub mod single;
pub mod stats;

pub use algebra::{ActPartition, AlgebraError, Atom, AtomId, DecisionProblem, Proposition, SplitSpec};
pub use dist::{DistError, DistSpec};
pub use refinement::{ConditionalQ, ModelError, ReflectionMode, RefinementModel, RefinementOutcome};
pub use stats::{Estimate, Executor, Sequential, SubStream};

/// Tolerance on total credence mass after every algebra operation.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance on Jeffrey's averaging identity.
pub const AVERAGING_TOL: f64 = 1e-9;
