//! Exact solving of small zero-sum games and the amenability dichotomy.
//!
//! Given a bounded payoff `m(d, x) = f(d) - x(d)` between a maximizing row
//! player over distinguishers and a minimizing column player over domain
//! points, strong duality says exactly one of two certificates exists at any
//! threshold: a column mixture keeping every row payoff below it, or a row
//! mixture beating it against every column. [`amenability_check`] returns
//! whichever side holds, with the certificate validated by direct evaluation.
//!
//! The solver runs a dense tableau simplex with Bland's rule in `f64`; if the
//! certificate re-check fails it reruns the same tableau in exact rational
//! arithmetic. Matrices here are tiny, so the exact path is cheap.

use num::rational::BigRational;
use num::{FromPrimitive, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::ConceptClass;
use crate::measures::Distribution;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("payoff matrix must be nonempty")]
    EmptyMatrix,
    #[error("payoff entries must be finite, got {value} at ({row},{col})")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("matrix {rows}x{cols} or grid {grid} exceeds the brute-force caps")]
    OracleCap {
        rows: usize,
        cols: usize,
        grid: usize,
    },
    #[error("simplex failed to converge: {0}")]
    Infeasible(String),
    #[error("certificate validation failed: {0}")]
    Certificate(String),
}

/// Row-major payoff matrix, rows = distinguishers, columns = domain points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    entries: Vec<Vec<f64>>,
}

impl PayoffMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self, SolveError> {
        if entries.is_empty() || entries[0].is_empty() {
            return Err(SolveError::EmptyMatrix);
        }
        let cols = entries[0].len();
        for (r, row) in entries.iter().enumerate() {
            if row.len() != cols {
                return Err(SolveError::Infeasible(format!(
                    "ragged matrix: row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(SolveError::BadEntry {
                        row: r,
                        col: c,
                        value: v,
                    });
                }
            }
        }
        Ok(PayoffMatrix { entries })
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries[0].len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r][c]
    }

    fn min_entry(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Value and optimal mixed strategies of a zero-sum game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    pub row_mix: Distribution,
    pub col_mix: Distribution,
    /// True when the floating-point certificate failed and the exact
    /// rational tableau produced the reported solution.
    pub exact_fallback: bool,
}

const DUALITY_TOL: f64 = 1e-9;

/// Solve `max_rows min_cols` by linear programming.
///
/// The returned strategies satisfy `min_x m(row_mix, x) >= value - tol` and
/// `max_d m(d, col_mix) <= value + tol` with `tol = 1e-9`.
pub fn solve_zero_sum(m: &PayoffMatrix) -> Result<GameSolution, SolveError> {
    let float = simplex_game::<F64Field>(m)?;
    match validate_solution(m, &float) {
        Ok(()) => Ok(float),
        Err(_) => {
            let mut exact = simplex_game::<RatField>(m)?;
            exact.exact_fallback = true;
            validate_solution(m, &exact).map_err(SolveError::Certificate)?;
            Ok(exact)
        }
    }
}

fn validate_solution(m: &PayoffMatrix, s: &GameSolution) -> Result<(), String> {
    let v = s.value;
    for x in 0..m.cols() {
        let payoff: f64 = (0..m.rows())
            .map(|d| s.row_mix.weight(d) * m.get(d, x))
            .sum();
        if payoff < v - DUALITY_TOL {
            return Err(format!(
                "row mixture guarantees only {payoff} < value {v} at column {x}"
            ));
        }
    }
    for d in 0..m.rows() {
        let payoff: f64 = (0..m.cols())
            .map(|x| s.col_mix.weight(x) * m.get(d, x))
            .sum();
        if payoff > v + DUALITY_TOL {
            return Err(format!(
                "column mixture leaks {payoff} > value {v} at row {d}"
            ));
        }
    }
    Ok(())
}

// --- simplex over an abstract ordered field ---------------------------------

trait Field: Clone + PartialOrd + Sized {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64_exact(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    /// Strict-positivity threshold for entering/pivot decisions.
    fn tol() -> Self;
}

#[derive(Clone, PartialEq, PartialOrd)]
struct F64Field(f64);

impl Field for F64Field {
    fn zero() -> Self {
        F64Field(0.0)
    }
    fn one() -> Self {
        F64Field(1.0)
    }
    fn from_f64_exact(x: f64) -> Self {
        F64Field(x)
    }
    fn to_f64(&self) -> f64 {
        self.0
    }
    fn add(&self, other: &Self) -> Self {
        F64Field(self.0 + other.0)
    }
    fn sub(&self, other: &Self) -> Self {
        F64Field(self.0 - other.0)
    }
    fn mul(&self, other: &Self) -> Self {
        F64Field(self.0 * other.0)
    }
    fn div(&self, other: &Self) -> Self {
        F64Field(self.0 / other.0)
    }
    fn tol() -> Self {
        F64Field(1e-9)
    }
}

#[derive(Clone, PartialEq, PartialOrd)]
struct RatField(BigRational);

impl Field for RatField {
    fn zero() -> Self {
        RatField(BigRational::zero())
    }
    fn one() -> Self {
        RatField(BigRational::from_f64(1.0).unwrap())
    }
    fn from_f64_exact(x: f64) -> Self {
        // f64 values are dyadic rationals; this conversion is exact.
        RatField(BigRational::from_f64(x).expect("finite payoff"))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
    fn add(&self, other: &Self) -> Self {
        RatField(&self.0 + &other.0)
    }
    fn sub(&self, other: &Self) -> Self {
        RatField(&self.0 - &other.0)
    }
    fn mul(&self, other: &Self) -> Self {
        RatField(&self.0 * &other.0)
    }
    fn div(&self, other: &Self) -> Self {
        RatField(&self.0 / &other.0)
    }
    fn tol() -> Self {
        RatField(BigRational::zero())
    }
}

const MAX_PIVOTS: usize = 20_000;

#[allow(clippy::needless_range_loop)] // dense tableau index arithmetic
/// Standard game-to-LP encoding. Shift payoffs so the minimum entry is 1,
/// then solve `max sum(w)` subject to `M'w <= 1, w >= 0`; the optimal basis
/// yields the column mixture directly and the row mixture from the duals.
fn simplex_game<S: Field>(m: &PayoffMatrix) -> Result<GameSolution, SolveError> {
    let rows = m.rows();
    let cols = m.cols();
    let shift = 1.0 - m.min_entry();
    let shift_s = S::from_f64_exact(shift);

    // Tableau: constraint rows over columns = vars | slacks | rhs.
    let width = cols + rows + 1;
    let mut t: Vec<Vec<S>> = (0..rows)
        .map(|i| {
            let mut row: Vec<S> = (0..cols)
                .map(|j| S::from_f64_exact(m.get(i, j)).add(&shift_s))
                .collect();
            row.extend((0..rows).map(|k| if k == i { S::one() } else { S::zero() }));
            row.push(S::one());
            row
        })
        .collect();
    // Objective row holds the negated costs; its rhs accumulates the value.
    let mut z: Vec<S> = (0..width)
        .map(|j| {
            if j < cols {
                S::zero().sub(&S::one())
            } else {
                S::zero()
            }
        })
        .collect();
    let mut basis: Vec<usize> = (0..rows).map(|i| cols + i).collect();

    let neg_tol = S::zero().sub(&S::tol());
    for _ in 0..MAX_PIVOTS {
        // Bland: lowest-index improving column.
        let Some(enter) = (0..cols + rows).find(|&j| z[j] < neg_tol) else {
            break;
        };
        // Ratio test; ties resolve to the smallest basic variable index.
        let mut leave: Option<(usize, S)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[enter] > S::tol() {
                let ratio = row[width - 1].div(&row[enter]);
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            return Err(SolveError::Infeasible(
                "unbounded direction in the game LP".into(),
            ));
        };
        let pivot = t[pivot_row][enter].clone();
        for v in t[pivot_row].iter_mut() {
            *v = v.div(&pivot);
        }
        for i in 0..rows {
            if i != pivot_row {
                let factor = t[i][enter].clone();
                if factor != S::zero() {
                    for j in 0..width {
                        t[i][j] = t[i][j].sub(&factor.mul(&t[pivot_row][j]));
                    }
                }
            }
        }
        let zfactor = z[enter].clone();
        if zfactor != S::zero() {
            for j in 0..width {
                z[j] = z[j].sub(&zfactor.mul(&t[pivot_row][j]));
            }
        }
        basis[pivot_row] = enter;
    }
    if (0..cols + rows).any(|j| z[j] < neg_tol) {
        return Err(SolveError::Infeasible("pivot budget exhausted".into()));
    }

    let objective = z[width - 1].clone();
    if objective <= S::zero() {
        return Err(SolveError::Infeasible(
            "degenerate objective in the game LP".into(),
        ));
    }

    let mut w = vec![S::zero(); cols];
    for (i, &b) in basis.iter().enumerate() {
        if b < cols {
            w[b] = t[i][width - 1].clone();
        }
    }
    let u: Vec<S> = (0..rows).map(|i| z[cols + i].clone()).collect();

    let col_mix = Distribution::new(w.iter().map(|v| v.to_f64().max(0.0)).collect())
        .map_err(|e| SolveError::Infeasible(format!("column mixture: {e}")))?;
    let row_mix = Distribution::new(u.iter().map(|v| v.to_f64().max(0.0)).collect())
        .map_err(|e| SolveError::Infeasible(format!("row mixture: {e}")))?;
    let value = S::one().div(&objective).to_f64() - shift;
    Ok(GameSolution {
        value,
        row_mix,
        col_mix,
        exact_fallback: false,
    })
}

// --- the dichotomy -----------------------------------------------------------

/// Threshold-side resolution: game values within `1e-9` of the threshold
/// resolve to the proper branch. Both branches are sound there.
const BOUNDARY_TOL: f64 = 1e-9;

/// Outcome of [`amenability_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AmenabilityResult {
    /// A domain mixture `p` with `f(d) - p(d) <= eps/2` for every row `d`.
    Proper(Distribution),
    /// A finitely supported distinguisher mixture beating every point:
    /// `E_{d~mixture}[f(d) - x(d)] >= margin > eps/2` for all `x`.
    Separator {
        mixture: Vec<(usize, f64)>,
        margin: f64,
    },
}

/// Decide which side of the minimax dichotomy a predictor falls on.
///
/// Builds the payoff `m(d, x) = f(d) - x(d)` over the rows and points of `c`
/// and solves it exactly. `f` must assign a `[0,1]` value to every row of `c`.
pub fn amenability_check(
    f: &[f64],
    c: &ConceptClass,
    eps: f64,
) -> Result<AmenabilityResult, SolveError> {
    assert_eq!(f.len(), c.len(), "predictor must cover every row");
    let entries: Vec<Vec<f64>> = c
        .rows()
        .iter()
        .zip(f)
        .map(|(row, &fd)| {
            (0..c.points())
                .map(|x| fd - row.get(x) as u8 as f64)
                .collect()
        })
        .collect();
    let m = PayoffMatrix::new(entries)?;
    let sol = solve_zero_sum(&m)?;
    if sol.value <= eps / 2.0 + BOUNDARY_TOL {
        Ok(AmenabilityResult::Proper(sol.col_mix))
    } else {
        let mixture: Vec<(usize, f64)> = sol
            .row_mix
            .weights()
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w > 0.0)
            .map(|(i, &w)| (i, w))
            .collect();
        Ok(AmenabilityResult::Separator {
            mixture,
            margin: sol.value,
        })
    }
}

// --- independent oracle -------------------------------------------------------

const ORACLE_DIM_CAP: usize = 6;
const ORACLE_GRID_CAP: usize = 400;

/// Brute-force the game value by scanning the column simplex on a grid of
/// step `1/grid` and taking the worst row response at each grid point.
///
/// The result overshoots the true value by at most the grid resolution; it is
/// the test oracle for [`solve_zero_sum`], deliberately sharing none of its
/// machinery.
pub fn brute_force_game_value(m: &PayoffMatrix, grid: usize) -> Result<f64, SolveError> {
    if m.rows() > ORACLE_DIM_CAP || m.cols() > ORACLE_DIM_CAP || grid > ORACLE_GRID_CAP || grid == 0
    {
        return Err(SolveError::OracleCap {
            rows: m.rows(),
            cols: m.cols(),
            grid,
        });
    }

    // One scratch row-sum buffer per column depth, so partial sums are
    // recomputed from the parent rather than undone in place.
    fn rec(
        m: &PayoffMatrix,
        col: usize,
        units_left: usize,
        scratch: &mut [Vec<f64>],
        best: &mut f64,
    ) {
        let rows = m.rows();
        if col == m.cols() - 1 {
            let u = units_left as f64;
            let acc = &scratch[col];
            let worst = (0..rows)
                .map(|r| acc[r] + u * m.get(r, col))
                .fold(f64::NEG_INFINITY, f64::max);
            if worst < *best {
                *best = worst;
            }
            return;
        }
        for units in 0..=units_left {
            let u = units as f64;
            let (head, tail) = scratch.split_at_mut(col + 1);
            let acc = &head[col];
            for r in 0..rows {
                tail[0][r] = acc[r] + u * m.get(r, col);
            }
            rec(m, col + 1, units_left - units, scratch, best);
        }
    }

    let mut scratch = vec![vec![0.0f64; m.rows()]; m.cols()];
    let mut best = f64::INFINITY;
    rec(m, 0, grid, &mut scratch, &mut best);
    Ok(best / grid as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{class_zoo, ZooName};
    use crate::rng::RngFactory;
    use rand::Rng;

    fn matrix(rows: &[&[f64]]) -> PayoffMatrix {
        PayoffMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn matching_pennies() {
        let m = matrix(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let s = solve_zero_sum(&m).unwrap();
        assert!(s.value.abs() < 1e-9);
        for w in s.row_mix.weights().iter().chain(s.col_mix.weights()) {
            assert!((w - 0.5).abs() < 1e-9);
        }
        let grid = brute_force_game_value(&m, 200).unwrap();
        assert!(grid.abs() <= 1.0 / 200.0 + 1e-12);
    }

    #[test]
    fn dominant_row_gives_pure_strategies() {
        let m = matrix(&[&[0.9, 0.8], &[0.1, 0.2]]);
        let s = solve_zero_sum(&m).unwrap();
        assert!((s.value - 0.8).abs() < 1e-9);
        assert!((s.row_mix.weight(0) - 1.0).abs() < 1e-9);
        assert!((s.col_mix.weight(1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_by_one() {
        let m = matrix(&[&[-0.37]]);
        let s = solve_zero_sum(&m).unwrap();
        assert!((s.value + 0.37).abs() < 1e-12);
        assert_eq!(brute_force_game_value(&m, 200).unwrap(), -0.37);
    }

    #[test]
    fn value_shift_equivariance() {
        let base = matrix(&[&[0.3, -0.4, 0.1], &[-0.2, 0.25, 0.0]]);
        let v0 = solve_zero_sum(&base).unwrap().value;
        let shifted = PayoffMatrix::new(
            (0..2)
                .map(|r| (0..3).map(|c| base.get(r, c) + 0.25).collect())
                .collect(),
        )
        .unwrap();
        let v1 = solve_zero_sum(&shifted).unwrap().value;
        assert!((v1 - v0 - 0.25).abs() < 1e-9);
    }

    #[test]
    fn oracle_matches_solver_on_random_instances() {
        let f = RngFactory::new(11);
        for t in 0..100u64 {
            let mut rng = f.trial(t);
            let entries: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let m = PayoffMatrix::new(entries).unwrap();
            let lp = solve_zero_sum(&m).unwrap();
            let grid = brute_force_game_value(&m, 200).unwrap();
            assert!(
                grid >= lp.value - 1e-9,
                "grid min cannot beat the true value"
            );
            assert!(
                grid - lp.value <= 2.0 / 200.0,
                "trial {t}: grid {grid} vs lp {}",
                lp.value
            );
        }
    }

    #[test]
    fn oracle_caps() {
        let wide = PayoffMatrix::new(vec![vec![0.0; 7], vec![0.0; 7]]).unwrap();
        assert!(matches!(
            brute_force_game_value(&wide, 100),
            Err(SolveError::OracleCap { .. })
        ));
        let ok = matrix(&[&[0.0, 1.0]]);
        assert!(matches!(
            brute_force_game_value(&ok, 500),
            Err(SolveError::OracleCap { .. })
        ));
    }

    #[test]
    fn amenability_zero_predictor_is_proper() {
        let c = class_zoo(ZooName::Singletons, 3, 0, 0)
            .unwrap()
            .symmetrize();
        let f = vec![0.0; c.len()];
        match amenability_check(&f, &c, 0.4).unwrap() {
            AmenabilityResult::Proper(p) => {
                for (d, row) in c.rows().iter().enumerate() {
                    let pd = crate::measures::expect(&p, row).unwrap();
                    assert!(f[d] - pd <= 0.2 + 1e-9);
                }
            }
            other => panic!("expected proper branch, got {other:?}"),
        }
    }

    #[test]
    fn amenability_ones_predictor_separates() {
        // With f == 1 over complement-closed singletons on two points, every
        // domain mixture leaves some distinguisher with payoff 1/2.
        let c = class_zoo(ZooName::Singletons, 2, 0, 0)
            .unwrap()
            .symmetrize();
        let f = vec![1.0; c.len()];
        match amenability_check(&f, &c, 0.5).unwrap() {
            AmenabilityResult::Separator { mixture, margin } => {
                assert!((margin - 0.5).abs() < 1e-9);
                for x in 0..c.points() {
                    let payoff: f64 = mixture
                        .iter()
                        .map(|&(d, w)| w * (1.0 - c.row(d).get(x) as u8 as f64))
                        .sum();
                    assert!(payoff > 0.25);
                }
            }
            other => panic!("expected separator branch, got {other:?}"),
        }
    }

    #[test]
    fn amenability_expectation_predictor_is_proper() {
        let c = class_zoo(ZooName::Thresholds, 4, 0, 0)
            .unwrap()
            .symmetrize();
        let p_star = Distribution::new(vec![0.4, 0.1, 0.3, 0.2]).unwrap();
        let f: Vec<f64> = c
            .rows()
            .iter()
            .map(|d| crate::measures::expect(&p_star, d).unwrap())
            .collect();
        match amenability_check(&f, &c, 0.3).unwrap() {
            AmenabilityResult::Proper(_) => {}
            other => panic!("expected proper branch, got {other:?}"),
        }
    }

    #[test]
    fn exact_fallback_agrees_with_float() {
        let m = matrix(&[&[0.5, -0.25, 0.125], &[-0.75, 0.3, 0.0]]);
        let float = simplex_game::<F64Field>(&m).unwrap();
        let exact = simplex_game::<RatField>(&m).unwrap();
        assert!((float.value - exact.value).abs() < 1e-12);
        assert!(validate_solution(&m, &exact).is_ok());
    }
}
