//! Small dense linear-algebra helpers: Gaussian elimination with partial
//! pivoting, used by the bimatrix support solver and by exact evaluation
//! of induced Markov chains.

/// Outcome of solving a (possibly non-square) linear system `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSolution {
    /// The system has exactly one solution.
    Unique(Vec<f64>),
    /// The system is consistent but has more than one solution.
    Underdetermined,
    /// The system has no solution.
    Inconsistent,
}

/// Solve `A x = b` where `a` has one row per equation. Rank decisions use
/// the given tolerance against the largest pivot candidate in each column.
pub fn solve_system(a: &[Vec<f64>], b: &[f64], tol: f64) -> SystemSolution {
    let rows = a.len();
    assert_eq!(rows, b.len());
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(*rhs);
            r
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        // Partial pivoting on column c.
        let (best, best_val) = (r..rows)
            .map(|i| (i, m[i][c].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap_or((r, 0.0));
        if best_val <= tol {
            continue;
        }
        m.swap(r, best);
        let piv = m[r][c];
        for i in 0..rows {
            if i != r && m[i][c].abs() > 0.0 {
                let f = m[i][c] / piv;
                for k in c..=cols {
                    m[i][k] -= f * m[r][k];
                }
                m[i][c] = 0.0;
            }
        }
        pivot_cols.push((r, c));
        r += 1;
        if r == rows {
            break;
        }
    }

    // Any zero row with non-zero rhs means the system is inconsistent.
    for i in r..rows {
        let lhs_max = m[i][..cols].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if lhs_max <= tol && m[i][cols].abs() > tol.max(1e-9) {
            return SystemSolution::Inconsistent;
        }
    }

    if pivot_cols.len() < cols {
        return SystemSolution::Underdetermined;
    }

    let mut x = vec![0.0; cols];
    for &(row, col) in pivot_cols.iter().rev() {
        let mut rhs = m[row][cols];
        for c in col + 1..cols {
            rhs -= m[row][c] * x[c];
        }
        x[col] = rhs / m[row][col];
    }
    SystemSolution::Unique(x)
}

/// Solve the square system `A x = b` by Gaussian elimination with partial
/// pivoting, returning `None` when the matrix is singular to working
/// precision. Used for exact chain evaluation.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    match solve_system(a, b, 1e-12 * matrix_scale(a).max(1.0)) {
        SystemSolution::Unique(x) if x.len() == n => Some(x),
        _ => None,
    }
}

fn matrix_scale(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_solution() {
        let a = vec![vec![2.0, 1.0], vec![1.0, -1.0]];
        let b = vec![5.0, 1.0];
        match solve_system(&a, &b, 1e-12) {
            SystemSolution::Unique(x) => {
                assert!((x[0] - 2.0).abs() < 1e-12);
                assert!((x[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("expected unique solution, got {other:?}"),
        }
    }

    #[test]
    fn detects_underdetermined() {
        let a = vec![vec![1.0, 1.0]];
        let b = vec![1.0];
        assert_eq!(solve_system(&a, &b, 1e-12), SystemSolution::Underdetermined);
    }

    #[test]
    fn detects_inconsistent() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let b = vec![1.0, 2.0];
        assert_eq!(solve_system(&a, &b, 1e-12), SystemSolution::Inconsistent);
    }

    #[test]
    fn redundant_rows_still_unique() {
        let a = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = vec![3.0, 3.0, 4.0];
        match solve_system(&a, &b, 1e-12) {
            SystemSolution::Unique(x) => assert_eq!(x, vec![3.0, 4.0]),
            other => panic!("expected unique, got {other:?}"),
        }
    }
}
