//! Small bimatrix games: equilibrium enumeration, the 2x2 zero-sum closed
//! form, and the game obtained when the row player refines one act.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg;
use crate::stats::{pairwise_sum, Estimate, Executor, SubStream};

/// Largest pure-deviation gain tolerated in an equilibrium.
pub const BEST_RESPONSE_TOL: f64 = 1e-9;
/// Equilibria closer than this in every coordinate are merged.
pub const DEDUP_TOL: f64 = 1e-7;
/// Equilibria within this much of the best welfare count as tied.
pub const WELFARE_TIE_TOL: f64 = 1e-12;
pub const MAX_STRATEGIES: usize = 4;

const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("payoff matrices must be nonempty, rectangular and of equal shape")]
    Shape,
    #[error("payoffs must be finite")]
    NonFinite,
    #[error("enumeration supports at most {MAX_STRATEGIES}x{MAX_STRATEGIES} games, got {rows}x{cols}")]
    TooLarge { rows: usize, cols: usize },
    #[error("the 2x2 game has a pure saddle point")]
    PureSaddle,
    #[error("no equilibrium found")]
    NoEquilibriumFound,
    #[error("exhaustive evaluation needs the two-point perturbation family")]
    ExhaustiveUnavailable,
    #[error("invalid perturbation model: {0}")]
    InvalidPerturbation(&'static str),
    #[error("sample count must be positive")]
    NoSamples,
}

/// Row player's payoffs in `payoff1`, column player's in `payoff2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixGame {
    payoff1: Vec<Vec<f64>>,
    payoff2: Vec<Vec<f64>>,
}

impl BimatrixGame {
    pub fn new(payoff1: Vec<Vec<f64>>, payoff2: Vec<Vec<f64>>) -> Result<Self, GameError> {
        let rows = payoff1.len();
        let cols = payoff1.first().map_or(0, Vec::len);
        let shaped = |m: &Vec<Vec<f64>>| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if rows == 0 || cols == 0 || !shaped(&payoff1) || !shaped(&payoff2) {
            return Err(GameError::Shape);
        }
        if payoff1.iter().chain(&payoff2).flatten().any(|x| !x.is_finite()) {
            return Err(GameError::NonFinite);
        }
        Ok(Self { payoff1, payoff2 })
    }

    /// Zero-sum game with row payoffs `payoff1`.
    pub fn zero_sum(payoff1: Vec<Vec<f64>>) -> Result<Self, GameError> {
        let payoff2 = payoff1.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        Self::new(payoff1, payoff2)
    }

    pub fn rows(&self) -> usize {
        self.payoff1.len()
    }

    pub fn cols(&self) -> usize {
        self.payoff1[0].len()
    }

    pub fn payoff1(&self) -> &[Vec<f64>] {
        &self.payoff1
    }

    pub fn payoff2(&self) -> &[Vec<f64>] {
        &self.payoff2
    }

    /// `payoff1 + payoff2` cell by cell.
    pub fn welfare_matrix(&self) -> Vec<Vec<f64>> {
        self.payoff1.iter().zip(&self.payoff2).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect()
    }

    /// The same game with the players' roles swapped, so a column-player
    /// refinement becomes a row-player one.
    pub fn transpose(&self) -> Self {
        let t = |m: &Vec<Vec<f64>>| (0..self.cols()).map(|j| m.iter().map(|r| r[j]).collect()).collect();
        Self { payoff1: t(&self.payoff2), payoff2: t(&self.payoff1) }
    }

    /// Expected payoffs `(U1, U2)` under `profile`.
    pub fn payoffs(&self, profile: &MixedProfile) -> (f64, f64) {
        (bilinear(&self.payoff1, &profile.row_mix, &profile.col_mix), bilinear(&self.payoff2, &profile.row_mix, &profile.col_mix))
    }

    /// `U1 + U2`, summed cell by cell so that zero-sum games give exactly 0.
    pub fn welfare(&self, profile: &MixedProfile) -> f64 {
        bilinear(&self.welfare_matrix(), &profile.row_mix, &profile.col_mix)
    }

    /// Largest gain either player can get from a pure deviation.
    pub fn max_deviation_gain(&self, profile: &MixedProfile) -> f64 {
        let (u1, u2) = self.payoffs(profile);
        let row_best = (0..self.rows())
            .map(|i| self.payoff1[i].iter().zip(&profile.col_mix).map(|(a, y)| a * y).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let col_best = (0..self.cols())
            .map(|j| self.payoff2.iter().zip(&profile.row_mix).map(|(r, x)| r[j] * x).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        (row_best - u1).max(col_best - u2)
    }

    pub fn is_equilibrium(&self, profile: &MixedProfile, tol: f64) -> bool {
        self.max_deviation_gain(profile) <= tol
    }
}

fn bilinear(m: &[Vec<f64>], x: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (row, xi) in m.iter().zip(x) {
        for (a, yj) in row.iter().zip(y) {
            total += xi * yj * a;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    pub row_mix: Vec<f64>,
    pub col_mix: Vec<f64>,
}

impl MixedProfile {
    pub fn new(row_mix: Vec<f64>, col_mix: Vec<f64>) -> Self {
        Self { row_mix, col_mix }
    }

    pub fn is_valid(&self) -> bool {
        let ok = |v: &[f64]| v.iter().all(|p| *p >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
        ok(&self.row_mix) && ok(&self.col_mix)
    }

    fn distance(&self, other: &Self) -> f64 {
        self.row_mix
            .iter()
            .zip(&other.row_mix)
            .chain(self.col_mix.iter().zip(&other.col_mix))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        let a = self.row_mix.iter().chain(&self.col_mix);
        let b = other.row_mix.iter().chain(&other.col_mix);
        for (x, y) in a.zip(b) {
            match x.total_cmp(y) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        Ordering::Equal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub profile: MixedProfile,
    pub payoffs: (f64, f64),
    pub welfare: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet {
    /// Extreme equilibria, sorted lexicographically by `(row_mix, col_mix)`.
    pub equilibria: Vec<Equilibrium>,
    /// Some support system was singular.
    pub degenerate: bool,
}

/// Mixed strategies of one player that make a set of the opponent's pure
/// strategies indifferent: the vertices of that player's best-response
/// polytope, plus infeasible points the pairing step discards.
fn vertex_candidates(opp_payoff: &[Vec<f64>], own: usize, opp: usize, degenerate: &mut bool) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for support in 1u32..(1 << own) {
        let idx: Vec<usize> = (0..own).filter(|i| support & (1 << i) != 0).collect();
        let s = idx.len();
        if s > opp {
            continue;
        }
        for tight in 1u32..(1 << opp) {
            if tight.count_ones() as usize != s {
                continue;
            }
            let cols: Vec<usize> = (0..opp).filter(|j| tight & (1 << j) != 0).collect();
            let mut a = Vec::with_capacity(s + 1);
            for &j in &cols {
                let mut row: Vec<f64> = idx.iter().map(|&i| opp_payoff[i][j]).collect();
                row.push(-1.0);
                a.push(row);
            }
            let mut sum_row = alloc::vec![1.0; s];
            sum_row.push(0.0);
            a.push(sum_row);
            let mut b = alloc::vec![0.0; s];
            b.push(1.0);
            let Some(sol) = linalg::solve(a, b) else {
                *degenerate = true;
                continue;
            };
            if sol[..s].iter().any(|p| *p < -NEGATIVE_SLACK) {
                continue;
            }
            let mut mix = alloc::vec![0.0; own];
            for (k, &i) in idx.iter().enumerate() {
                mix[i] = sol[k].max(0.0);
            }
            let total: f64 = mix.iter().sum();
            mix.iter_mut().for_each(|p| *p /= total);
            if !out.iter().any(|m| m.iter().zip(&mix).all(|(a, b)| (a - b).abs() <= DEDUP_TOL)) {
                out.push(mix);
            }
        }
    }
    out
}

/// All extreme Nash equilibria of a game with at most four strategies per
/// player, by support enumeration.
pub fn enumerate_equilibria(game: &BimatrixGame) -> Result<EquilibriumSet, GameError> {
    let (m, n) = (game.rows(), game.cols());
    if m > MAX_STRATEGIES || n > MAX_STRATEGIES {
        return Err(GameError::TooLarge { rows: m, cols: n });
    }
    let mut degenerate = false;
    // the row mix makes columns indifferent, so it is solved against payoff2
    let xs = vertex_candidates(&game.payoff2, m, n, &mut degenerate);
    let p1t: Vec<Vec<f64>> = (0..n).map(|j| game.payoff1.iter().map(|r| r[j]).collect()).collect();
    let ys = vertex_candidates(&p1t, n, m, &mut degenerate);
    let mut equilibria: Vec<Equilibrium> = Vec::new();
    for x in &xs {
        for y in &ys {
            let profile = MixedProfile::new(x.clone(), y.clone());
            if !game.is_equilibrium(&profile, BEST_RESPONSE_TOL) {
                continue;
            }
            if equilibria.iter().any(|e| e.profile.distance(&profile) <= DEDUP_TOL) {
                continue;
            }
            let payoffs = game.payoffs(&profile);
            let welfare = game.welfare(&profile);
            equilibria.push(Equilibrium { profile, payoffs, welfare });
        }
    }
    equilibria.sort_by(|a, b| a.profile.lex_cmp(&b.profile));
    Ok(EquilibriumSet { equilibria, degenerate })
}

/// The equilibrium with the largest payoff sum. Ties within
/// [`WELFARE_TIE_TOL`] go to the lexicographically smallest profile.
///
/// Welfare is bilinear, so its maximum over each equilibrium component is
/// attained at an extreme equilibrium.
pub fn welfare_optimal_equilibrium(game: &BimatrixGame) -> Result<Equilibrium, GameError> {
    let set = enumerate_equilibria(game)?;
    let best = set.equilibria.iter().map(|e| e.welfare).fold(f64::NEG_INFINITY, f64::max);
    // the set is sorted, so the first tied entry is the lexicographic minimum
    set.equilibria.into_iter().find(|e| e.welfare >= best - WELFARE_TIE_TOL).ok_or(GameError::NoEquilibriumFound)
}

/// Row payoffs of a 2x2 zero-sum game: rows `(A, notA)`, columns `(A2, notA2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroSumSpec {
    pub v: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ZeroSumSpec {
    pub const MATCHING_PENNIES: Self = Self { v: 1.0, alpha: -1.0, beta: -1.0, gamma: 1.0 };

    pub fn new(v: f64, alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { v, alpha, beta, gamma }
    }

    /// No pure saddle: the unique equilibrium is interior.
    pub fn has_interior_equilibrium(&self) -> bool {
        let Self { v, alpha, beta, gamma } = *self;
        (v - beta) * (gamma - alpha) > 0.0 && (v - alpha) * (gamma - beta) > 0.0
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if ![self.v, self.alpha, self.beta, self.gamma].iter().all(|x| x.is_finite()) {
            return Err(GameError::NonFinite);
        }
        if !self.has_interior_equilibrium() {
            return Err(GameError::PureSaddle);
        }
        Ok(())
    }

    pub fn game(&self) -> BimatrixGame {
        BimatrixGame::zero_sum(alloc::vec![alloc::vec![self.v, self.alpha], alloc::vec![self.beta, self.gamma]])
            .expect("2x2 shape")
    }
}

/// Closed-form value and interior equilibrium of a 2x2 zero-sum game.
pub fn solve_zero_sum_2x2(spec: &ZeroSumSpec) -> Result<(f64, MixedProfile), GameError> {
    spec.validate()?;
    let ZeroSumSpec { v, alpha, beta, gamma } = *spec;
    let d = v - alpha - beta + gamma;
    let p = (gamma - beta) / d;
    let q = (gamma - alpha) / d;
    let value = (v * gamma - alpha * beta) / d;
    Ok((value, MixedProfile::new(alloc::vec![p, 1.0 - p], alloc::vec![q, 1.0 - q])))
}

/// Payoff perturbations of the refined row act. `e1[j][k]` is the row
/// player's perturbation in column `j` on branch `k`; `e2` the column player's.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Perturbation {
    pub e1: [[f64; 2]; 2],
    pub e2: [[f64; 2]; 2],
}

/// The 3x2 game with rows `(A and B1, A and B2, notA)`.
pub fn refine_game(spec: &ZeroSumSpec, eps: &Perturbation) -> BimatrixGame {
    let ZeroSumSpec { v, alpha, beta, gamma } = *spec;
    let (e1, e2) = (eps.e1, eps.e2);
    let payoff1 = alloc::vec![
        alloc::vec![v + e1[0][0], alpha + e1[1][0]],
        alloc::vec![v + e1[0][1], alpha + e1[1][1]],
        alloc::vec![beta, gamma],
    ];
    let payoff2 = alloc::vec![
        alloc::vec![-v + e2[0][0], -alpha + e2[1][0]],
        alloc::vec![-v + e2[0][1], -alpha + e2[1][1]],
        alloc::vec![-beta, -gamma],
    ];
    BimatrixGame::new(payoff1, payoff2).expect("3x2 shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationFamily {
    /// `±magnitude`; the column player's sign matches with probability `(1 + rho) / 2`.
    TwoPoint,
    /// Normal with sd `magnitude`; `e2 = rho * e1 + sqrt(1 - rho^2) * eta`.
    Gaussian,
}

/// Mean-zero, cellwise-correlated perturbations, independent across cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    pub family: PerturbationFamily,
    pub magnitude: f64,
    pub rho: f64,
}

impl PerturbationModel {
    pub fn two_point(magnitude: f64, rho: f64) -> Self {
        Self { family: PerturbationFamily::TwoPoint, magnitude, rho }
    }

    pub fn gaussian(sd: f64, rho: f64) -> Self {
        Self { family: PerturbationFamily::Gaussian, magnitude: sd, rho }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.magnitude >= 0.0) || !self.magnitude.is_finite() {
            return Err(GameError::InvalidPerturbation("magnitude must be finite and nonnegative"));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(GameError::InvalidPerturbation("rho must lie in [-1, 1]"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Perturbation {
        let a = self.magnitude;
        let mut out = Perturbation::default();
        for j in 0..2 {
            for k in 0..2 {
                let (x, y) = match self.family {
                    PerturbationFamily::TwoPoint => {
                        let x = if rng.random::<f64>() < 0.5 { a } else { -a };
                        let same = rng.random::<f64>() < 0.5 * (1.0 + self.rho);
                        (x, if same { x } else { -x })
                    }
                    PerturbationFamily::Gaussian => {
                        let x = a * rng.sample::<f64, _>(StandardNormal);
                        let eta = a * rng.sample::<f64, _>(StandardNormal);
                        (x, self.rho * x + libm::sqrt(1.0 - self.rho * self.rho) * eta)
                    }
                };
                out.e1[j][k] = x;
                out.e2[j][k] = y;
            }
        }
        out
    }

    /// Every sign pattern with positive probability: 16 when `|rho| = 1`,
    /// 256 otherwise.
    pub fn enumerate(&self) -> Result<Vec<(f64, Perturbation)>, GameError> {
        if self.family != PerturbationFamily::TwoPoint {
            return Err(GameError::ExhaustiveUnavailable);
        }
        let a = self.magnitude;
        let same = 0.5 * (1.0 + self.rho);
        let cell: Vec<(f64, f64, f64)> = [(0.5 * same, a, a), (0.5 * (1.0 - same), a, -a), (0.5 * (1.0 - same), -a, a), (0.5 * same, -a, -a)]
            .into_iter()
            .filter(|c| c.0 > 0.0)
            .collect();
        let c = cell.len();
        let mut out = Vec::with_capacity(c.pow(4));
        for code in 0..c.pow(4) {
            let mut p = 1.0;
            let mut eps = Perturbation::default();
            let mut rest = code;
            for cellno in 0..4 {
                let (pc, x, y) = cell[rest % c];
                rest /= c;
                let (j, k) = (cellno / 2, cellno % 2);
                p *= pc;
                eps.e1[j][k] = x;
                eps.e2[j][k] = y;
            }
            out.push((p, eps));
        }
        Ok(out)
    }
}

/// Where a realization falls among the full-agreement events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgreementEvent {
    /// The players do not both strictly prefer the same branch in every column.
    Disagreement,
    /// Full agreement on branch `b`, but `notA` weakly dominates it for the row player.
    Dominated { branch: usize },
    /// Full agreement on branch `b`, which beats `notA` in some column.
    Beneficial { branch: usize },
}

impl AgreementEvent {
    pub fn branch(&self) -> Option<usize> {
        match *self {
            Self::Disagreement => None,
            Self::Dominated { branch } | Self::Beneficial { branch } => Some(branch),
        }
    }
}

pub fn classify_agreement(spec: &ZeroSumSpec, eps: &Perturbation) -> AgreementEvent {
    let favours = |b: usize| (0..2).all(|j| eps.e1[j][b] > eps.e1[j][1 - b] && eps.e2[j][b] > eps.e2[j][1 - b]);
    let Some(branch) = (0..2).find(|&b| favours(b)) else {
        return AgreementEvent::Disagreement;
    };
    let dominated = spec.beta >= spec.v + eps.e1[0][branch] && spec.gamma >= spec.alpha + eps.e1[1][branch];
    if dominated {
        AgreementEvent::Dominated { branch }
    } else {
        AgreementEvent::Beneficial { branch }
    }
}

/// One refined game, solved.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub welfare: f64,
    pub event: AgreementEvent,
    pub equilibrium: Equilibrium,
    pub degenerate: bool,
    /// The reported equilibrium passed an independent best-response check.
    pub verified: bool,
}

pub fn solve_realization(spec: &ZeroSumSpec, eps: &Perturbation) -> Result<Realization, GameError> {
    let game = refine_game(spec, eps);
    let set = enumerate_equilibria(&game)?;
    let degenerate = set.degenerate;
    let best = set.equilibria.iter().map(|e| e.welfare).fold(f64::NEG_INFINITY, f64::max);
    let equilibrium =
        set.equilibria.into_iter().find(|e| e.welfare >= best - WELFARE_TIE_TOL).ok_or(GameError::NoEquilibriumFound)?;
    let verified = equilibrium.profile.is_valid() && game.max_deviation_gain(&equilibrium.profile) <= BEST_RESPONSE_TOL;
    Ok(Realization { welfare: equilibrium.welfare, event: classify_agreement(spec, eps), equilibrium, degenerate, verified })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MonteCarlo,
    Exhaustive,
}

/// Expected welfare-optimal welfare of the refined game with event statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareReport {
    pub welfare: Estimate,
    pub p_full_agreement: f64,
    pub p_dominated: f64,
    pub p_beneficial: f64,
    /// `E[W* | disagreement]`, when that event has positive weight.
    pub welfare_given_disagreement: Option<f64>,
    pub welfare_given_beneficial: Option<f64>,
    /// `E[e1[j][b*] | beneficial]` per column for the row player.
    pub row_gain_given_beneficial: Option<[f64; 2]>,
    /// `E[e2[j][b*] | beneficial]` per column for the column player.
    pub col_gain_given_beneficial: Option<[f64; 2]>,
    pub degenerate_realizations: usize,
    pub unverified_realizations: usize,
    pub realizations: usize,
}

fn summarize(weighted: &[(f64, Perturbation, Realization)], welfare: Estimate) -> WelfareReport {
    let mass = |pred: &dyn Fn(&AgreementEvent) -> bool| -> f64 {
        pairwise_sum(&weighted.iter().filter(|r| pred(&r.2.event)).map(|r| r.0).collect::<Vec<_>>())
    };
    let cond = |pred: &dyn Fn(&AgreementEvent) -> bool, f: &dyn Fn(&Perturbation, &Realization) -> f64| -> Option<f64> {
        let m = mass(pred);
        (m > 0.0).then(|| {
            pairwise_sum(&weighted.iter().filter(|r| pred(&r.2.event)).map(|r| r.0 * f(&r.1, &r.2)).collect::<Vec<_>>()) / m
        })
    };
    let beneficial = |e: &AgreementEvent| matches!(e, AgreementEvent::Beneficial { .. });
    let star = |which: usize| -> Option<[f64; 2]> {
        let col = |j: usize| {
            cond(&beneficial, &|eps, r| {
                let b = r.event.branch().unwrap_or(0);
                if which == 1 { eps.e1[j][b] } else { eps.e2[j][b] }
            })
        };
        Some([col(0)?, col(1)?])
    };
    WelfareReport {
        welfare,
        p_full_agreement: mass(&|e| e.branch().is_some()),
        p_dominated: mass(&|e| matches!(e, AgreementEvent::Dominated { .. })),
        p_beneficial: mass(&beneficial),
        welfare_given_disagreement: cond(&|e| *e == AgreementEvent::Disagreement, &|_, r| r.welfare),
        welfare_given_beneficial: cond(&beneficial, &|_, r| r.welfare),
        row_gain_given_beneficial: star(1),
        col_gain_given_beneficial: star(2),
        degenerate_realizations: weighted.iter().filter(|r| r.2.degenerate).count(),
        unverified_realizations: weighted.iter().filter(|r| !r.2.verified).count(),
        realizations: weighted.len(),
    }
}

/// `E[W*]` after the row player refines act `A` of `spec`.
pub fn expected_refined_welfare<E: Executor>(
    spec: &ZeroSumSpec,
    model: &PerturbationModel,
    method: Method,
    n: usize,
    stream: SubStream,
    exec: &E,
) -> Result<WelfareReport, GameError> {
    spec.validate()?;
    model.validate()?;
    match method {
        Method::Exhaustive => {
            let space = model.enumerate()?;
            let solved = space
                .into_iter()
                .map(|(p, eps)| Ok((p, eps, solve_realization(spec, &eps)?)))
                .collect::<Result<Vec<_>, GameError>>()?;
            let mean = pairwise_sum(&solved.iter().map(|r| r.0 * r.2.welfare).collect::<Vec<_>>());
            Ok(summarize(&solved, Estimate::exact(mean)))
        }
        Method::MonteCarlo => {
            if n == 0 {
                return Err(GameError::NoSamples);
            }
            let solved = exec
                .map(n, |i| {
                    let eps = model.sample(&mut stream.rng(i as u64));
                    solve_realization(spec, &eps).map(|r| (1.0 / n as f64, eps, r))
                })
                .into_iter()
                .collect::<Result<Vec<_>, GameError>>()?;
            let w: Vec<f64> = solved.iter().map(|r| r.2.welfare).collect();
            Ok(summarize(&solved, Estimate::from_samples(&w)))
        }
    }
}
