//! Nash equilibria of bimatrix games by support enumeration, with
//! social-welfare (SWNE) and social-cost (SCNE) optimal selection.
//!
//! For every support pair (R, C) the indifference-and-complementarity
//! system is solved directly: the column mix must equalise the row
//! player's payoff across R, the row mix must equalise the column
//! player's payoff across C, and off-support strategies may not do
//! better. Supports whose linear system is underdetermined describe a
//! continuum of equilibria; their extreme points reappear as the unique
//! solutions of neighbouring supports, so only uniquely-solvable systems
//! are collected and the degenerate supports are reported as such.
//! Every candidate passes an independent best-response check before it
//! is admitted.

use crate::linalg::{solve_system, SystemSolution};
use crate::{DEDUP_TOLERANCE, VERIFY_TOLERANCE};
use thiserror::Error;

/// A two-player general-sum one-shot game.
#[derive(Debug, Clone)]
pub struct BimatrixGame {
    pub z1: Vec<Vec<f64>>,
    pub z2: Vec<Vec<f64>>,
}

impl BimatrixGame {
    pub fn new(z1: Vec<Vec<f64>>, z2: Vec<Vec<f64>>) -> Self {
        assert!(!z1.is_empty() && !z1[0].is_empty(), "empty bimatrix game");
        assert_eq!(z1.len(), z2.len(), "utility arrays must share shape");
        let m = z1[0].len();
        assert!(z1.iter().all(|r| r.len() == m));
        assert!(z2.iter().all(|r| r.len() == m));
        assert!(
            z1.iter().chain(z2.iter()).flatten().all(|v| v.is_finite()),
            "bimatrix entries must be finite"
        );
        BimatrixGame { z1, z2 }
    }

    pub fn rows(&self) -> usize {
        self.z1.len()
    }

    pub fn cols(&self) -> usize {
        self.z1[0].len()
    }

    pub fn negated(&self) -> BimatrixGame {
        BimatrixGame {
            z1: self.z1.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
            z2: self.z2.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
        }
    }
}

/// One Nash equilibrium: a mixed profile and the per-player values.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
    pub values: (f64, f64),
    pub row_support: u32,
    pub col_support: u32,
}

impl Equilibrium {
    pub fn sum(&self) -> f64 {
        self.values.0 + self.values.1
    }
}

/// All equilibria found by support enumeration, sorted by
/// (value sum, player-1 value, player-2 value) descending with ties kept
/// in support-enumeration order.
#[derive(Debug, Clone, Default)]
pub struct EquilibriumSet {
    pub equilibria: Vec<Equilibrium>,
    /// Support pairs whose solution set is a continuum (row mask, col mask).
    pub degenerate_supports: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    SocialWelfare,
    SocialCost,
}

/// The selected optimal equilibrium together with its witness profile.
#[derive(Debug, Clone)]
pub struct OptimalEquilibrium {
    pub values: (f64, f64),
    pub profile: Equilibrium,
    pub kind: EquilibriumKind,
}

#[derive(Debug, Error)]
pub enum BimatrixError {
    #[error("no equilibrium survived verification in a {rows}x{cols} bimatrix game")]
    NoEquilibrium { rows: usize, cols: usize },
}

/// Enumerate the Nash equilibria of `g`.
pub fn enumerate_ne(g: &BimatrixGame) -> EquilibriumSet {
    let (l, m) = (g.rows(), g.cols());
    assert!(l <= 16 && m <= 16, "support enumeration is desk-scale only");

    // Joint scaling keeps solver tolerances meaningful; values are
    // rescaled on output so welfare comparisons see original utilities.
    let scale = g
        .z1
        .iter()
        .chain(g.z2.iter())
        .flatten()
        .fold(1.0f64, |a, &b| a.max(b.abs()));
    let s1: Vec<Vec<f64>> = g.z1.iter().map(|r| r.iter().map(|v| v / scale).collect()).collect();
    let s2: Vec<Vec<f64>> = g.z2.iter().map(|r| r.iter().map(|v| v / scale).collect()).collect();

    let mut found: Vec<Equilibrium> = Vec::new();
    let mut degenerate = Vec::new();

    for r_mask in 1u32..(1 << l) {
        for c_mask in 1u32..(1 << m) {
            match solve_support(&s1, &s2, r_mask, c_mask) {
                SupportOutcome::Solution(x, y, u, v) => {
                    if verify_candidate(&s1, &s2, &x, &y, u, v) {
                        let eq = Equilibrium {
                            row_strategy: clamp_dist(x),
                            col_strategy: clamp_dist(y),
                            values: (u * scale, v * scale),
                            row_support: r_mask,
                            col_support: c_mask,
                        };
                        if !found.iter().any(|e| same_equilibrium(e, &eq)) {
                            found.push(eq);
                        }
                    }
                }
                SupportOutcome::Degenerate => degenerate.push((r_mask, c_mask)),
                SupportOutcome::None => {}
            }
        }
    }

    sort_equilibria(&mut found);
    EquilibriumSet {
        equilibria: found,
        degenerate_supports: degenerate,
    }
}

fn sort_equilibria(eqs: &mut Vec<Equilibrium>) {
    // Stable sort retains support-enumeration order among exact ties.
    eqs.sort_by(|a, b| {
        b.sum()
            .total_cmp(&a.sum())
            .then(b.values.0.total_cmp(&a.values.0))
            .then(b.values.1.total_cmp(&a.values.1))
    });
}

fn clamp_dist(mut d: Vec<f64>) -> Vec<f64> {
    for v in d.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = d.iter().sum();
    if s > 0.0 {
        for v in d.iter_mut() {
            *v /= s;
        }
    }
    d
}

enum SupportOutcome {
    Solution(Vec<f64>, Vec<f64>, f64, f64),
    Degenerate,
    None,
}

fn mask_indices(mask: u32, len: usize) -> Vec<usize> {
    (0..len).filter(|i| mask & (1 << i) != 0).collect()
}

/// Solve the indifference system for one support pair on the (scaled)
/// game. The column mix makes rows in R indifferent; the row mix makes
/// columns in C indifferent.
fn solve_support(z1: &[Vec<f64>], z2: &[Vec<f64>], r_mask: u32, c_mask: u32) -> SupportOutcome {
    let l = z1.len();
    let m = z1[0].len();
    let rs = mask_indices(r_mask, l);
    let cs = mask_indices(c_mask, m);

    // Unknowns: y_j (j in C) then u.
    let mut a = Vec::with_capacity(rs.len() + 1);
    let mut b = Vec::with_capacity(rs.len() + 1);
    for &i in &rs {
        let mut row = vec![0.0; cs.len() + 1];
        for (k, &j) in cs.iter().enumerate() {
            row[k] = z1[i][j];
        }
        row[cs.len()] = -1.0;
        a.push(row);
        b.push(0.0);
    }
    let mut simplex = vec![1.0; cs.len() + 1];
    simplex[cs.len()] = 0.0;
    a.push(simplex);
    b.push(1.0);
    let y_sol = match solve_system(&a, &b, 1e-11) {
        SystemSolution::Unique(s) => s,
        SystemSolution::Underdetermined => return SupportOutcome::Degenerate,
        SystemSolution::Inconsistent => return SupportOutcome::None,
    };

    // Unknowns: x_i (i in R) then v.
    let mut a = Vec::with_capacity(cs.len() + 1);
    let mut b = Vec::with_capacity(cs.len() + 1);
    for &j in &cs {
        let mut row = vec![0.0; rs.len() + 1];
        for (k, &i) in rs.iter().enumerate() {
            row[k] = z2[i][j];
        }
        row[rs.len()] = -1.0;
        a.push(row);
        b.push(0.0);
    }
    let mut simplex = vec![1.0; rs.len() + 1];
    simplex[rs.len()] = 0.0;
    a.push(simplex);
    b.push(1.0);
    let x_sol = match solve_system(&a, &b, 1e-11) {
        SystemSolution::Unique(s) => s,
        SystemSolution::Underdetermined => return SupportOutcome::Degenerate,
        SystemSolution::Inconsistent => return SupportOutcome::None,
    };

    let u = y_sol[cs.len()];
    let v = x_sol[rs.len()];
    let mut y = vec![0.0; m];
    for (k, &j) in cs.iter().enumerate() {
        y[j] = y_sol[k];
    }
    let mut x = vec![0.0; l];
    for (k, &i) in rs.iter().enumerate() {
        x[i] = x_sol[k];
    }
    SupportOutcome::Solution(x, y, u, v)
}

/// Independent best-response filter: the profile must be a distribution
/// and neither player may have a profitable pure deviation.
fn verify_candidate(
    z1: &[Vec<f64>],
    z2: &[Vec<f64>],
    x: &[f64],
    y: &[f64],
    u: f64,
    v: f64,
) -> bool {
    let tol = VERIFY_TOLERANCE;
    if x.iter().chain(y.iter()).any(|&p| p < -tol) {
        return false;
    }
    for row in z1 {
        let payoff: f64 = row.iter().zip(y).map(|(z, p)| z * p).sum();
        if payoff > u + tol {
            return false;
        }
    }
    for j in 0..y.len() {
        let payoff: f64 = x.iter().enumerate().map(|(i, p)| z2[i][j] * p).sum();
        if payoff > v + tol {
            return false;
        }
    }
    true
}

fn same_equilibrium(a: &Equilibrium, b: &Equilibrium) -> bool {
    let close = |p: f64, q: f64| (p - q).abs() <= DEDUP_TOLERANCE;
    close(a.values.0, b.values.0)
        && close(a.values.1, b.values.1)
        && a.row_strategy
            .iter()
            .zip(&b.row_strategy)
            .all(|(p, q)| close(*p, *q))
        && a.col_strategy
            .iter()
            .zip(&b.col_strategy)
            .all(|(p, q)| close(*p, *q))
}

/// Remove strictly dominated rows and columns iteratively. Only strict
/// dominance by a pure strategy is used: weak dominance can eliminate
/// SWNE or SCNE profiles, strict dominance cannot remove any equilibrium.
/// Returns the reduced game with maps from reduced to original indices.
pub fn filter_dominated(g: &BimatrixGame) -> (BimatrixGame, Vec<usize>, Vec<usize>) {
    let mut rows: Vec<usize> = (0..g.rows()).collect();
    let mut cols: Vec<usize> = (0..g.cols()).collect();
    loop {
        let mut changed = false;
        if rows.len() > 1 {
            let dominated = rows.iter().position(|&i| {
                rows.iter()
                    .any(|&i2| i2 != i && cols.iter().all(|&j| g.z1[i2][j] > g.z1[i][j]))
            });
            if let Some(pos) = dominated {
                rows.remove(pos);
                changed = true;
            }
        }
        if cols.len() > 1 {
            let dominated = cols.iter().position(|&j| {
                cols.iter()
                    .any(|&j2| j2 != j && rows.iter().all(|&i| g.z2[i][j2] > g.z2[i][j]))
            });
            if let Some(pos) = dominated {
                cols.remove(pos);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let reduced = BimatrixGame::new(
        rows.iter()
            .map(|&i| cols.iter().map(|&j| g.z1[i][j]).collect())
            .collect(),
        rows.iter()
            .map(|&i| cols.iter().map(|&j| g.z2[i][j]).collect())
            .collect(),
    );
    (reduced, rows, cols)
}

/// Social-welfare optimal Nash equilibrium: the equilibrium maximising
/// the value sum, ties broken by the player-1 value, then the player-2
/// value, then support-enumeration order.
pub fn swne(g: &BimatrixGame) -> Result<OptimalEquilibrium, BimatrixError> {
    let (reduced, row_map, col_map) = filter_dominated(g);
    let set = enumerate_ne(&reduced);
    let best = set
        .equilibria
        .into_iter()
        .next()
        .ok_or(BimatrixError::NoEquilibrium {
            rows: g.rows(),
            cols: g.cols(),
        })?;
    Ok(OptimalEquilibrium {
        values: best.values,
        profile: restore_indices(best, &row_map, &col_map, g.rows(), g.cols()),
        kind: EquilibriumKind::SocialWelfare,
    })
}

/// Social-cost optimal Nash equilibrium, computed by negating both
/// utility arrays, selecting an SWNE of the negated game and negating the
/// selected values back.
pub fn scne(g: &BimatrixGame) -> Result<OptimalEquilibrium, BimatrixError> {
    let neg = g.negated();
    let opt = swne(&neg)?;
    Ok(OptimalEquilibrium {
        values: (-opt.values.0, -opt.values.1),
        profile: Equilibrium {
            values: (-opt.profile.values.0, -opt.profile.values.1),
            ..opt.profile
        },
        kind: EquilibriumKind::SocialCost,
    })
}

fn restore_indices(
    eq: Equilibrium,
    row_map: &[usize],
    col_map: &[usize],
    l: usize,
    m: usize,
) -> Equilibrium {
    let mut x = vec![0.0; l];
    for (k, &i) in row_map.iter().enumerate() {
        x[i] = eq.row_strategy[k];
    }
    let mut y = vec![0.0; m];
    for (k, &j) in col_map.iter().enumerate() {
        y[j] = eq.col_strategy[k];
    }
    let mut row_support = 0u32;
    let mut col_support = 0u32;
    for (k, &i) in row_map.iter().enumerate() {
        if eq.row_support & (1 << k) != 0 {
            row_support |= 1 << i;
        }
    }
    for (k, &j) in col_map.iter().enumerate() {
        if eq.col_support & (1 << k) != 0 {
            col_support |= 1 << j;
        }
    }
    Equilibrium {
        row_strategy: x,
        col_strategy: y,
        values: eq.values,
        row_support,
        col_support,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stag_hunt() -> BimatrixGame {
        BimatrixGame::new(
            vec![vec![2.0, 2.0, 2.0], vec![0.0, 4.0, 6.0]],
            vec![vec![4.0, 2.0, 0.0], vec![4.0, 6.0, 9.0]],
        )
    }

    #[test]
    fn stag_hunt_has_three_equilibria() {
        let set = enumerate_ne(&stag_hunt());
        assert_eq!(set.equilibria.len(), 3);
        let mut sums: Vec<(f64, f64)> = set.equilibria.iter().map(|e| e.values).collect();
        sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sums[0].0 - 2.0).abs() < 1e-9 && (sums[0].1 - 4.0).abs() < 1e-9);
        assert!((sums[1].0 - 2.0).abs() < 1e-9 && (sums[1].1 - 4.0).abs() < 1e-9);
        assert!((sums[2].0 - 6.0).abs() < 1e-9 && (sums[2].1 - 9.0).abs() < 1e-9);
        // The mixed equilibrium has the documented profile.
        let mixed = set
            .equilibria
            .iter()
            .find(|e| e.row_strategy.iter().all(|&p| p > 0.0))
            .expect("mixed equilibrium");
        assert!((mixed.row_strategy[0] - 5.0 / 9.0).abs() < 1e-9);
        assert!((mixed.row_strategy[1] - 4.0 / 9.0).abs() < 1e-9);
        assert!((mixed.col_strategy[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!(mixed.col_strategy[1].abs() < 1e-9);
        assert!((mixed.col_strategy[2] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn stag_hunt_swne_and_scne() {
        let g = stag_hunt();
        let sw = swne(&g).unwrap();
        assert!((sw.values.0 - 6.0).abs() < 1e-9);
        assert!((sw.values.1 - 9.0).abs() < 1e-9);
        assert!((sw.profile.row_strategy[1] - 1.0).abs() < 1e-9);
        assert!((sw.profile.col_strategy[2] - 1.0).abs() < 1e-9);

        // The negated game also has three equilibria, with the documented values.
        let negset = enumerate_ne(&g.negated());
        assert_eq!(negset.equilibria.len(), 3);
        let mut vals: Vec<(f64, f64)> = negset.equilibria.iter().map(|e| e.values).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0].0 + 2.0).abs() < 1e-9 && (vals[0].1 + 4.0).abs() < 1e-9);
        assert!((vals[1].0 + 2.0).abs() < 1e-9 && vals[1].1.abs() < 1e-9);
        assert!(vals[2].0.abs() < 1e-9 && (vals[2].1 + 4.0).abs() < 1e-9);

        let sc = scne(&g).unwrap();
        assert!((sc.values.0 - 2.0).abs() < 1e-9);
        assert!(sc.values.1.abs() < 1e-9);
        // Profile (nc1, c2).
        assert!((sc.profile.row_strategy[0] - 1.0).abs() < 1e-9);
        assert!((sc.profile.col_strategy[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_by_one_game() {
        let g = BimatrixGame::new(vec![vec![3.0]], vec![vec![-1.0]]);
        let set = enumerate_ne(&g);
        assert_eq!(set.equilibria.len(), 1);
        assert_eq!(set.equilibria[0].values, (3.0, -1.0));
    }

    #[test]
    fn indifference_game_vertices() {
        // Both players indifferent: every support pair admits equilibria.
        let g = BimatrixGame::new(
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            vec![vec![2.0, 2.0], vec![4.0, 4.0]],
        );
        let set = enumerate_ne(&g);
        let vals: Vec<(f64, f64)> = set.equilibria.iter().map(|e| e.values).collect();
        for expect in [(1.0, 4.0), (0.0, 4.0), (1.0, 2.0), (0.0, 2.0)] {
            assert!(
                vals.iter()
                    .any(|v| (v.0 - expect.0).abs() < 1e-9 && (v.1 - expect.1).abs() < 1e-9),
                "missing vertex value pair {expect:?} in {vals:?}"
            );
        }
        assert!(!set.degenerate_supports.is_empty());

        let sw = swne(&g).unwrap();
        assert!((sw.values.0 - 1.0).abs() < 1e-9);
        assert!((sw.values.1 - 4.0).abs() < 1e-9);
        assert!((sw.profile.row_strategy[1] - 1.0).abs() < 1e-9);
        assert!((sw.profile.col_strategy[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dominance_filter_cases() {
        // Strictly dominated row removed.
        let g = BimatrixGame::new(
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        );
        let (reduced, rows, _) = filter_dominated(&g);
        assert_eq!(reduced.rows(), 1);
        assert_eq!(rows, vec![1]);

        // Weak dominance only: nothing removed.
        let g = BimatrixGame::new(
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            vec![vec![2.0, 2.0], vec![4.0, 4.0]],
        );
        let (reduced, _, _) = filter_dominated(&g);
        assert_eq!(reduced.rows(), 2);
        assert_eq!(reduced.cols(), 2);

        // Prisoner's dilemma style strict dominance reduces to 1x1 and
        // leaves the equilibrium untouched.
        let g = BimatrixGame::new(
            vec![vec![3.0, 0.0], vec![5.0, 1.0]],
            vec![vec![3.0, 5.0], vec![0.0, 1.0]],
        );
        let (reduced, rows, cols) = filter_dominated(&g);
        assert_eq!((reduced.rows(), reduced.cols()), (1, 1));
        assert_eq!((rows[0], cols[0]), (1, 1));
        let full = enumerate_ne(&g);
        assert_eq!(full.equilibria.len(), 1);
        assert_eq!(full.equilibria[0].values, (1.0, 1.0));
    }

    #[test]
    fn zero_game_swne() {
        let g = BimatrixGame::new(
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        );
        let sw = swne(&g).unwrap();
        assert_eq!(sw.values, (0.0, 0.0));
    }

    #[test]
    fn zero_sum_consistency() {
        let z1 = vec![
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
        ];
        let z2: Vec<Vec<f64>> = z1.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let g = BimatrixGame::new(z1.clone(), z2);
        let v = crate::matrix::solve_matrix_game(&crate::matrix::MatrixGame::new(z1))
            .unwrap()
            .value;
        for eq in enumerate_ne(&g).equilibria {
            assert!((eq.values.0 - v).abs() < 1e-6);
            assert!((eq.values.1 + v).abs() < 1e-6);
        }
    }
}
