//! Zero-sum matrix games solved by linear programming.
//!
//! The LP kernel is a self-contained two-phase dense simplex with Bland's
//! rule as an anti-cycling fallback. Matrix games are normalised by an
//! additive offset so the game value is strictly positive, which keeps the
//! tableau well-posed regardless of the sign of the utilities.

use crate::{PIVOT_TOLERANCE, VERIFY_TOLERANCE};
use thiserror::Error;

/// Relation of a linear constraint `sum a_i x_i (op) b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// A single linear constraint.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub op: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, op: Relation, rhs: f64) -> Self {
        Constraint { coeffs, op, rhs }
    }
}

/// A linear program in maximisation form. Variables are non-negative by
/// default; `free` marks sign-unrestricted variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex failed to terminate")]
    Stalled,
}

/// Maximise `lp.objective` subject to `lp.constraints`.
pub fn lp_maximize(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n_orig = lp.objective.len();
    debug_assert!(lp.constraints.iter().all(|c| c.coeffs.len() == n_orig));
    debug_assert_eq!(lp.free.len(), n_orig);

    // Map each original variable to one or two non-negative columns.
    let mut col_of = Vec::with_capacity(n_orig);
    let mut n = 0usize;
    for &f in &lp.free {
        col_of.push(n);
        n += if f { 2 } else { 1 };
    }

    let m = lp.constraints.len();
    let expand = |coeffs: &[f64]| -> Vec<f64> {
        let mut row = vec![0.0; n];
        for (k, &v) in coeffs.iter().enumerate() {
            let c = col_of[k];
            row[c] = v;
            if lp.free[k] {
                row[c + 1] = -v;
            }
        }
        row
    };

    // Build equality-form rows with slack/surplus columns, rhs >= 0.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut ops: Vec<Relation> = Vec::with_capacity(m);
    for c in &lp.constraints {
        let mut row = expand(&c.coeffs);
        let mut b = c.rhs;
        let mut op = c.op;
        if b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            b = -b;
            op = match op {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push(row);
        rhs.push(b);
        ops.push(op);
    }

    let n_slack = ops.iter().filter(|o| **o != Relation::Eq).count();
    let n_art = m; // one artificial per row keeps the initial basis trivial
    let total = n + n_slack + n_art;

    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut slack_at = n;
    for (i, row) in rows.iter().enumerate() {
        let mut t = vec![0.0; total + 1];
        t[..n].copy_from_slice(row);
        match ops[i] {
            Relation::Le => {
                t[slack_at] = 1.0;
                slack_at += 1;
            }
            Relation::Ge => {
                t[slack_at] = -1.0;
                slack_at += 1;
            }
            Relation::Eq => {}
        }
        t[n + n_slack + i] = 1.0;
        basis[i] = n + n_slack + i;
        t[total] = rhs[i];
        tab.push(t);
    }

    // Phase 1: maximise -(sum of artificials).
    let mut cost1 = vec![0.0; total + 1];
    for j in n + n_slack..total {
        cost1[j] = -1.0;
    }
    let mut obj = reduced_costs(&cost1, &tab, &basis, total);
    simplex_iterate(&mut tab, &mut obj, &mut basis, total, n + n_slack)?;
    // Phase-1 optimum is -(sum of artificials); anything clearly below zero
    // means no feasible point exists.
    let feas_tol = 1e-7 * (1.0 + rhs.iter().sum::<f64>());
    if obj[total] < -feas_tol {
        return Err(LpError::Infeasible);
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= n + n_slack {
            if let Some(j) = (0..n + n_slack).find(|&j| tab[i][j].abs() > PIVOT_TOLERANCE) {
                pivot(&mut tab, &mut obj, &mut basis, i, j, total);
            }
        }
    }

    // Phase 2: original objective, artificial columns frozen.
    let mut cost2 = vec![0.0; total + 1];
    for (k, &c) in lp.objective.iter().enumerate() {
        cost2[col_of[k]] = c;
        if lp.free[k] {
            cost2[col_of[k] + 1] = -c;
        }
    }
    let mut obj = reduced_costs(&cost2, &tab, &basis, total);
    simplex_iterate(&mut tab, &mut obj, &mut basis, total, n + n_slack)?;

    let mut x = vec![0.0; total];
    for (i, &b) in basis.iter().enumerate() {
        x[b] = tab[i][total];
    }
    let point = (0..n_orig)
        .map(|k| {
            let c = col_of[k];
            if lp.free[k] {
                x[c] - x[c + 1]
            } else {
                x[c]
            }
        })
        .collect::<Vec<_>>();
    let value = lp
        .objective
        .iter()
        .zip(&point)
        .map(|(c, v)| c * v)
        .sum::<f64>();
    Ok(LpSolution { value, point })
}

/// Reduced-cost row for the given cost vector and basis, with the current
/// objective value in the last slot.
fn reduced_costs(cost: &[f64], tab: &[Vec<f64>], basis: &[usize], total: usize) -> Vec<f64> {
    let mut obj = cost.to_vec();
    for (i, &b) in basis.iter().enumerate() {
        let cb = cost[b];
        if cb != 0.0 {
            for j in 0..=total {
                obj[j] -= cb * tab[i][j];
            }
        }
    }
    // obj[total] now holds -(objective value); flip so callers read it directly.
    obj[total] = -obj[total];
    obj
}

/// Run simplex pivots until optimal. Columns at index >= `frozen_from` are
/// artificials and never enter the basis.
fn simplex_iterate(
    tab: &mut Vec<Vec<f64>>,
    obj: &mut Vec<f64>,
    basis: &mut [usize],
    total: usize,
    frozen_from: usize,
) -> Result<(), LpError> {
    let m = tab.len();
    let mut degenerate_streak = 0usize;
    let max_pivots = 200 + 40 * (m + total) * (m + total);
    for _ in 0..max_pivots {
        let bland = degenerate_streak > 2 * (m + total);
        let entering = if bland {
            (0..frozen_from).find(|&j| obj[j] > PIVOT_TOLERANCE)
        } else {
            (0..frozen_from)
                .filter(|&j| obj[j] > PIVOT_TOLERANCE)
                .max_by(|&a, &b| obj[a].total_cmp(&obj[b]))
        };
        let Some(j) = entering else {
            return Ok(());
        };
        // Ratio test; ties by smallest basis variable (lexicographic guard).
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if tab[i][j] > PIVOT_TOLERANCE {
                let ratio = tab[i][total] / tab[i][j];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOLERANCE
                            || (ratio < lr + PIVOT_TOLERANCE && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, ratio)) = leave else {
            return Err(LpError::Unbounded);
        };
        if ratio.abs() <= PIVOT_TOLERANCE {
            degenerate_streak += 1;
        } else {
            degenerate_streak = 0;
        }
        pivot(tab, obj, basis, i, j, total);
    }
    Err(LpError::Stalled)
}

fn pivot(
    tab: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    row: usize,
    col: usize,
    total: usize,
) {
    let piv = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= piv;
    }
    for i in 0..tab.len() {
        if i != row {
            let f = tab[i][col];
            if f != 0.0 {
                for j in 0..=total {
                    tab[i][j] -= f * tab[row][j];
                }
                tab[i][col] = 0.0;
            }
        }
    }
    let f = obj[col];
    if f != 0.0 {
        for j in 0..total {
            obj[j] -= f * tab[row][j];
        }
        // obj[total] stores the objective value with flipped sign convention.
        obj[total] += f * tab[row][total];
        obj[col] = 0.0;
    }
    basis[row] = col;
}

/// A zero-sum two-player one-shot game given by the row player's utilities.
#[derive(Debug, Clone)]
pub struct MatrixGame {
    pub utilities: Vec<Vec<f64>>,
}

impl MatrixGame {
    pub fn new(utilities: Vec<Vec<f64>>) -> Self {
        assert!(!utilities.is_empty() && !utilities[0].is_empty());
        let m = utilities[0].len();
        assert!(utilities.iter().all(|r| r.len() == m));
        assert!(
            utilities.iter().flatten().all(|v| v.is_finite()),
            "matrix game entries must be finite"
        );
        MatrixGame { utilities }
    }

    pub fn rows(&self) -> usize {
        self.utilities.len()
    }

    pub fn cols(&self) -> usize {
        self.utilities[0].len()
    }
}

/// Value and optimal mixed strategies of a matrix game.
#[derive(Debug, Clone)]
pub struct MatrixSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("LP solve failed on a {rows}x{cols} matrix game: {source}")]
    Lp {
        rows: usize,
        cols: usize,
        source: LpError,
    },
    #[error("solution failed verification on a {rows}x{cols} matrix game (residual {residual:.3e})")]
    Verification {
        rows: usize,
        cols: usize,
        residual: f64,
    },
}

/// Solve a matrix game: the row player maximises, the column player
/// minimises. Both optimal strategies are recovered (the column side from
/// the dual LP) and checked against the minimax guarantees before
/// returning.
pub fn solve_matrix_game(g: &MatrixGame) -> Result<MatrixSolution, SolveError> {
    let (l, m) = (g.rows(), g.cols());

    // Degenerate shapes have pure solutions.
    if l == 1 {
        let (j, v) = argmin(&g.utilities[0]);
        let mut y = vec![0.0; m];
        y[j] = 1.0;
        return Ok(MatrixSolution {
            value: v,
            row_strategy: vec![1.0],
            col_strategy: y,
        });
    }
    if m == 1 {
        let col: Vec<f64> = g.utilities.iter().map(|r| r[0]).collect();
        let (i, v) = argmax(&col);
        let mut x = vec![0.0; l];
        x[i] = 1.0;
        return Ok(MatrixSolution {
            value: v,
            row_strategy: x,
            col_strategy: vec![1.0],
        });
    }

    // Offset so the shifted game value is >= 1.
    let min_entry = g
        .utilities
        .iter()
        .flatten()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let offset = 1.0 - min_entry;
    let z = |i: usize, j: usize| g.utilities[i][j] + offset;

    // Primal: maximise v s.t. sum_i x_i z_ij >= v for all j, x on the simplex.
    let mut primal = LinearProgram {
        objective: {
            let mut c = vec![0.0; l + 1];
            c[l] = 1.0;
            c
        },
        constraints: Vec::with_capacity(m + 1),
        free: {
            let mut f = vec![false; l + 1];
            f[l] = true;
            f
        },
    };
    for j in 0..m {
        let mut coeffs = vec![0.0; l + 1];
        for (i, c) in coeffs.iter_mut().enumerate().take(l) {
            *c = z(i, j);
        }
        coeffs[l] = -1.0;
        primal.constraints.push(Constraint::new(coeffs, Relation::Ge, 0.0));
    }
    let mut simplex_row = vec![1.0; l + 1];
    simplex_row[l] = 0.0;
    primal
        .constraints
        .push(Constraint::new(simplex_row, Relation::Eq, 1.0));

    let psol = lp_maximize(&primal).map_err(|source| SolveError::Lp {
        rows: l,
        cols: m,
        source,
    })?;
    let row_strategy = normalize_dist(&psol.point[..l]);

    // Dual: minimise v s.t. sum_j y_j z_ij <= v for all i, y on the simplex.
    let mut dual = LinearProgram {
        objective: {
            let mut c = vec![0.0; m + 1];
            c[m] = -1.0;
            c
        },
        constraints: Vec::with_capacity(l + 1),
        free: {
            let mut f = vec![false; m + 1];
            f[m] = true;
            f
        },
    };
    for i in 0..l {
        let mut coeffs = vec![0.0; m + 1];
        for (j, c) in coeffs.iter_mut().enumerate().take(m) {
            *c = z(i, j);
        }
        coeffs[m] = -1.0;
        dual.constraints.push(Constraint::new(coeffs, Relation::Le, 0.0));
    }
    let mut simplex_row = vec![1.0; m + 1];
    simplex_row[m] = 0.0;
    dual.constraints
        .push(Constraint::new(simplex_row, Relation::Eq, 1.0));

    let dsol = lp_maximize(&dual).map_err(|source| SolveError::Lp {
        rows: l,
        cols: m,
        source,
    })?;
    let col_strategy = normalize_dist(&dsol.point[..m]);

    let value = psol.value - offset;
    let scale = 1.0f64.max(offset.abs()).max(
        g.utilities
            .iter()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b.abs())),
    );
    let tol = VERIFY_TOLERANCE * scale;

    // Minimax guarantees (both directions) and duality gap.
    let mut residual: f64 = (psol.value - (-dsol.value)).abs();
    for j in 0..m {
        let got: f64 = (0..l).map(|i| row_strategy[i] * g.utilities[i][j]).sum();
        residual = residual.max(value - got);
    }
    for i in 0..l {
        let got: f64 = (0..m).map(|j| col_strategy[j] * g.utilities[i][j]).sum();
        residual = residual.max(got - value);
    }
    if residual > tol {
        return Err(SolveError::Verification {
            rows: l,
            cols: m,
            residual,
        });
    }

    Ok(MatrixSolution {
        value,
        row_strategy,
        col_strategy,
    })
}

/// Solve a matrix game in which the ROW player minimises and the column
/// player maximises: the dual orientation used for `min`-form queries.
pub fn solve_matrix_game_min(g: &MatrixGame) -> Result<MatrixSolution, SolveError> {
    let negated = MatrixGame::new(
        g.utilities
            .iter()
            .map(|r| r.iter().map(|v| -v).collect())
            .collect(),
    );
    let sol = solve_matrix_game(&negated)?;
    Ok(MatrixSolution {
        value: -sol.value,
        row_strategy: sol.row_strategy,
        col_strategy: sol.col_strategy,
    })
}

fn normalize_dist(raw: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = d.iter().sum();
    if s > 0.0 {
        for v in d.iter_mut() {
            *v /= s;
        }
    }
    d
}

fn argmax(v: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    (best, v[best])
}

fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] {
            best = i;
        }
    }
    (best, v[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(objective: Vec<f64>, free: Vec<bool>, constraints: Vec<Constraint>) -> LinearProgram {
        LinearProgram {
            objective,
            constraints,
            free,
        }
    }

    #[test]
    fn free_variable_bounded_above() {
        // maximise v subject to v <= 0, v free.
        let p = lp(
            vec![1.0],
            vec![true],
            vec![Constraint::new(vec![1.0], Relation::Le, 0.0)],
        );
        let s = lp_maximize(&p).unwrap();
        assert!(s.value.abs() < 1e-9);
    }

    #[test]
    fn infeasible_pair() {
        // x >= 1 and x <= 0.
        let p = lp(
            vec![1.0],
            vec![false],
            vec![
                Constraint::new(vec![1.0], Relation::Ge, 1.0),
                Constraint::new(vec![1.0], Relation::Le, 0.0),
            ],
        );
        assert_eq!(lp_maximize(&p).unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let p = lp(
            vec![1.0],
            vec![false],
            vec![Constraint::new(vec![1.0], Relation::Ge, 1.0)],
        );
        assert_eq!(lp_maximize(&p).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn rps_lp_directly() {
        // maximise v s.t. x2 - x3 >= v, x3 - x1 >= v, x1 - x2 >= v on the simplex.
        let p = lp(
            vec![0.0, 0.0, 0.0, 1.0],
            vec![false, false, false, true],
            vec![
                Constraint::new(vec![0.0, 1.0, -1.0, -1.0], Relation::Ge, 0.0),
                Constraint::new(vec![-1.0, 0.0, 1.0, -1.0], Relation::Ge, 0.0),
                Constraint::new(vec![1.0, -1.0, 0.0, -1.0], Relation::Ge, 0.0),
                Constraint::new(vec![1.0, 1.0, 1.0, 0.0], Relation::Eq, 1.0),
            ],
        );
        let s = lp_maximize(&p).unwrap();
        assert!(s.value.abs() < 1e-9);
    }

    #[test]
    fn rps_matrix_game() {
        let g = MatrixGame::new(vec![
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
        ]);
        let s = solve_matrix_game(&g).unwrap();
        assert!(s.value.abs() < 1e-9);
        for p in &s.row_strategy {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }
        for p in &s.col_strategy {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn trivial_one_by_one() {
        let g = MatrixGame::new(vec![vec![-2.5]]);
        let s = solve_matrix_game(&g).unwrap();
        assert_eq!(s.value, -2.5);
        assert_eq!(s.row_strategy, vec![1.0]);
        assert_eq!(s.col_strategy, vec![1.0]);
    }

    #[test]
    fn matching_pennies() {
        let g = MatrixGame::new(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let s = solve_matrix_game(&g).unwrap();
        assert!(s.value.abs() < 1e-9);
        assert!((s.row_strategy[0] - 0.5).abs() < 1e-9);
        assert!((s.col_strategy[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn min_orientation_flips_value() {
        let g = MatrixGame::new(vec![vec![3.0, 1.0], vec![0.0, 2.0]]);
        let maxi = solve_matrix_game(&g).unwrap();
        let mini = solve_matrix_game_min(&g).unwrap();
        // Row-minimising value of Z equals -(row-maximising value of -Z).
        let neg = MatrixGame::new(vec![vec![-3.0, -1.0], vec![0.0, -2.0]]);
        let nsol = solve_matrix_game(&neg).unwrap();
        assert!((mini.value + nsol.value).abs() < 1e-9);
        assert!(mini.value <= maxi.value + 1e-9);
    }
}
