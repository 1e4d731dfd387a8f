//! Brute-force evaluators used to cross-check the estimators and solvers:
//! exact expectations over finite outcome spaces and lattice maximizers.

use alloc::vec::Vec;

use thiserror::Error;

use crate::games::BimatrixGame;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("outcome probabilities must be nonnegative and sum to 1, got total {0}")]
    BadProbabilities(f64),
    #[error("grid resolution must be at least 101 points per axis, got {0}")]
    ResolutionTooLow(usize),
    #[error("empty box")]
    EmptyBox,
}

pub const SPACE_MASS_TOL: f64 = 1e-12;

/// Finite list of `(probability, payload)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOutcomeSpace<T> {
    outcomes: Vec<(f64, T)>,
}

impl<T> DiscreteOutcomeSpace<T> {
    pub fn new(outcomes: Vec<(f64, T)>) -> Result<Self, OracleError> {
        let total: f64 = outcomes.iter().map(|o| o.0).sum();
        if outcomes.iter().any(|o| !(o.0 >= 0.0)) || (total - 1.0).abs() > SPACE_MASS_TOL {
            return Err(OracleError::BadProbabilities(total));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[(f64, T)] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// `sum_i p_i * f(payload_i)`.
    pub fn exact_expectation<F: FnMut(&T) -> f64>(&self, mut f: F) -> f64 {
        self.outcomes.iter().map(|(p, x)| p * f(x)).sum()
    }

    /// Probability of the payloads satisfying `pred`.
    pub fn probability<F: FnMut(&T) -> bool>(&self, mut pred: F) -> f64 {
        self.outcomes.iter().filter(|(_, x)| pred(x)).map(|(p, _)| p).sum()
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, mut f: F) -> DiscreteOutcomeSpace<U> {
        DiscreteOutcomeSpace { outcomes: self.outcomes.iter().map(|(p, x)| (*p, f(x))).collect() }
    }
}

/// Free-function form of [`DiscreteOutcomeSpace::exact_expectation`].
pub fn exact_expectation<T, F: FnMut(&T) -> f64>(space: &DiscreteOutcomeSpace<T>, f: F) -> f64 {
    space.exact_expectation(f)
}

/// Result of a lattice search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMax<P> {
    pub point: P,
    pub value: f64,
    /// Lattice spacing per axis.
    pub step: f64,
    /// Largest change of `f` between neighbouring lattice points. The true
    /// maximum over the box exceeds `value` by at most about this much.
    pub lipschitz_slack: f64,
}

fn lattice(lo: f64, hi: f64, resolution: usize) -> Result<impl Fn(usize) -> f64 + Copy, OracleError> {
    if resolution < 101 {
        return Err(OracleError::ResolutionTooLow(resolution));
    }
    if !(lo <= hi) {
        return Err(OracleError::EmptyBox);
    }
    let last = resolution - 1;
    Ok(move |i: usize| if i == last { hi } else { lo + (hi - lo) * (i as f64) / (last as f64) })
}

/// Maximizes `f` over `resolution` evenly spaced points of `[lo, hi]`.
/// Ties go to the lowest index.
pub fn grid_maximize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, resolution: usize) -> Result<GridMax<f64>, OracleError> {
    let at = lattice(lo, hi, resolution)?;
    let mut best = (at(0), f64::NEG_INFINITY);
    let mut slack: f64 = 0.0;
    let mut prev: Option<f64> = None;
    for i in 0..resolution {
        let x = at(i);
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
        if let Some(p) = prev {
            if p.is_finite() && v.is_finite() {
                slack = slack.max((v - p).abs());
            }
        }
        prev = Some(v);
    }
    Ok(GridMax { point: best.0, value: best.1, step: (hi - lo) / (resolution - 1) as f64, lipschitz_slack: slack })
}

/// Maximizes `f` over a `resolution x resolution` lattice of
/// `[lo.0, hi.0] x [lo.1, hi.1]`, row-major with ties to the lowest index.
pub fn grid_maximize_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    lo: (f64, f64),
    hi: (f64, f64),
    resolution: usize,
) -> Result<GridMax<(f64, f64)>, OracleError> {
    let ax = lattice(lo.0, hi.0, resolution)?;
    let ay = lattice(lo.1, hi.1, resolution)?;
    let mut best = ((ax(0), ay(0)), f64::NEG_INFINITY);
    let mut slack: f64 = 0.0;
    let mut prev_row: Vec<f64> = Vec::new();
    let mut row = Vec::with_capacity(resolution);
    for i in 0..resolution {
        let x = ax(i);
        row.clear();
        for j in 0..resolution {
            let y = ay(j);
            let v = f(x, y);
            if v > best.1 {
                best = ((x, y), v);
            }
            if v.is_finite() {
                if let Some(&left) = row.last() {
                    if f64::is_finite(left) {
                        slack = slack.max((v - left).abs());
                    }
                }
                if let Some(&up) = prev_row.get(j) {
                    if f64::is_finite(up) {
                        slack = slack.max((v - up).abs());
                    }
                }
            }
            row.push(v);
        }
        core::mem::swap(&mut prev_row, &mut row);
    }
    let step = ((hi.0 - lo.0) / (resolution - 1) as f64).max((hi.1 - lo.1) / (resolution - 1) as f64);
    Ok(GridMax { point: best.0, value: best.1, step, lipschitz_slack: slack })
}

/// Best equilibrium welfare of an `m x 2` bimatrix game by scanning the
/// column player's mix, independent of support enumeration. `None` unless the
/// game has exactly two columns.
///
/// For a column mix `(t, 1 - t)` welfare is linear in `t`, so only `t` in
/// `{0, 1}` and the row players' payoff ties matter. At each such `t` the row
/// mix ranges over best responses that leave the column player willing to
/// play the mix: single rows that already do, and pairs of rows mixed to
/// make the column player indifferent.
pub fn scan_equilibrium_welfare(game: &BimatrixGame) -> Option<f64> {
    if game.cols() != 2 {
        return None;
    }
    let a = game.payoff1();
    let b = game.payoff2();
    let m = a.len();
    let mut ts = alloc::vec![0.0, 1.0];
    for i in 0..m {
        for j in i + 1..m {
            let (di, dj) = (a[i][0] - a[i][1], a[j][0] - a[j][1]);
            if (di - dj).abs() > SCAN_TOL {
                let t = (a[j][1] - a[i][1]) / (di - dj);
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
    }
    let cell = |i: usize, k: usize| a[i][k] + b[i][k];
    let mut best = f64::NEG_INFINITY;
    for &t in &ts {
        let pay: Vec<f64> = a.iter().map(|r| t * r[0] + (1.0 - t) * r[1]).collect();
        let top = pay.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let responses: Vec<usize> = (0..m).filter(|&i| pay[i] >= top - SCAN_TOL).collect();
        let welfare = |i: usize| t * cell(i, 0) + (1.0 - t) * cell(i, 1);
        let gain: Vec<f64> = b.iter().map(|r| r[0] - r[1]).collect();
        let supports = |g: f64| {
            if t == 0.0 {
                g <= SCAN_TOL
            } else if t == 1.0 {
                g >= -SCAN_TOL
            } else {
                g.abs() <= SCAN_TOL
            }
        };
        for &i in &responses {
            if supports(gain[i]) {
                best = best.max(welfare(i));
            }
            for &j in &responses {
                if j > i && gain[i] * gain[j] < 0.0 {
                    let x = gain[j] / (gain[j] - gain[i]);
                    best = best.max(x * welfare(i) + (1.0 - x) * welfare(j));
                }
            }
        }
    }
    Some(best)
}

const SCAN_TOL: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn expectation_of_symmetric_pair() {
        let s = DiscreteOutcomeSpace::new(vec![(0.5, 1.0), (0.5, -1.0)]).unwrap();
        assert_eq!(exact_expectation(&s, |x| *x), 0.0);
        assert_eq!(s.probability(|x| *x > 0.0), 0.5);
    }

    #[test]
    fn expectation_is_linear() {
        let s = DiscreteOutcomeSpace::new(vec![(0.2, 1.0), (0.3, 4.0), (0.5, -2.0)]).unwrap();
        let f = |x: &f64| x * x;
        let g = |x: &f64| 3.0 * x - 1.0;
        let lhs = s.exact_expectation(|x| 2.0 * f(x) + g(x));
        let rhs = 2.0 * s.exact_expectation(f) + s.exact_expectation(g);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(DiscreteOutcomeSpace::new(vec![(0.5, ()), (0.6, ())]).is_err());
        assert!(DiscreteOutcomeSpace::new(vec![(-0.5, ()), (1.5, ())]).is_err());
    }

    #[test]
    fn parabola_peak() {
        let g = grid_maximize_1d(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 10_001).unwrap();
        assert!((g.point - 0.3).abs() < 1e-4);
        assert!(grid_maximize_1d(|x| x, 0.0, 1.0, 100).is_err());
    }

    #[test]
    fn linear_nash_product_peaks_at_half() {
        let g = grid_maximize_1d(|x| x * (1.0 - x), 0.0, 1.0, 1001).unwrap();
        assert!((g.point - 0.5).abs() <= g.step);
    }

    #[test]
    fn orthogonal_weights_corner() {
        // agent 1 values only dimension 1, agent 2 only dimension 2
        let g = grid_maximize_2d(|x1, x2| x1 * (1.0 - x2), (0.0, 0.0), (1.0, 1.0), 201).unwrap();
        assert_eq!(g.point, (1.0, 0.0));
        assert_eq!(g.value, 1.0);
    }
}
