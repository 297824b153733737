//! Dense two-phase primal simplex for the small equality-constrained linear
//! programs arising in quasiprobability decompositions.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const MAX_ITERS: usize = 20_000;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Minimize `c . x` subject to `A x = b`, `x >= 0`.
///
/// `rows` holds the constraint matrix row by row. Uses Bland's rule, so it
/// terminates on degenerate problems.
pub fn solve_lp(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let m = rows.len();
    let n = c.len();
    if b.len() != m || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Validation("inconsistent LP dimensions".into()));
    }

    // Tableau columns: n structural vars, m artificials, then the rhs.
    let width = n + m + 1;
    let mut t = vec![vec![0.0f64; width]; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * rows[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut cost1 = vec![0.0f64; n + m];
    for j in n..n + m {
        cost1[j] = 1.0;
    }
    run_simplex(&mut t, &mut basis, &cost1, n + m)?;
    let phase1_obj: f64 = basis
        .iter()
        .enumerate()
        .map(|(i, &j)| if j >= n { t[i][width - 1] } else { 0.0 })
        .sum();
    if phase1_obj > FEAS_TOL {
        return Err(Error::Infeasible(format!(
            "phase-1 residual {phase1_obj:.3e}"
        )));
    }

    // Drive any remaining artificials out of the basis.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                pivot(&mut t, i, j);
                basis[i] = j;
            }
            // Otherwise the row is redundant; its rhs is ~0 and it stays
            // parked on the artificial.
        }
    }

    // Phase 2: original objective, artificials barred from entering.
    let mut cost2 = vec![0.0f64; n + m];
    cost2[..n].copy_from_slice(c);
    run_simplex(&mut t, &mut basis, &cost2, n)?;

    let mut x = vec![0.0f64; n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i][width - 1];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective })
}

/// Simplex iterations over the first `n_enter` columns.
fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    n_enter: usize,
) -> Result<()> {
    let m = t.len();
    let width = t[0].len();
    for _ in 0..MAX_ITERS {
        // Reduced costs r_j = c_j - c_B . T[:, j]; Bland picks the first
        // strictly negative one.
        let mut entering = None;
        for j in 0..n_enter {
            if basis.contains(&j) {
                continue;
            }
            let mut r = cost[j];
            for i in 0..m {
                r -= cost[basis[i]] * t[i][j];
            }
            if r < -PIVOT_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(col) = entering else {
            return Ok(());
        };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][col] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][col];
                let better = match leaving {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - PIVOT_TOL
                            || (ratio < lr + PIVOT_TOL && basis[i] < basis[li])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leaving else {
            return Err(Error::Infeasible("LP is unbounded".into()));
        };

        pivot(t, row, col);
        basis[row] = col;
    }
    Err(Error::NonConvergence("simplex iteration cap reached".into()))
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let width = t[0].len();
    let p = t[row][col];
    for j in 0..width {
        t[row][j] /= p;
    }
    for i in 0..t.len() {
        if i != row {
            let factor = t[i][col];
            if factor != 0.0 {
                for j in 0..width {
                    t[i][j] -= factor * t[row][j];
                }
            }
        }
    }
}

/// Minimize `sum_b |q_b|` subject to `sum_b q_b * columns[b] = target`.
///
/// Signed coefficients are split as `q = q+ - q-`; the optimum of the split
/// problem has `q+ . q- = 0` componentwise, so the objective equals the L1
/// norm. Returns the signed coefficients and the L1 value.
pub fn l1_decomposition(columns: &[Vec<f64>], target: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = columns.len();
    let m = target.len();
    if k == 0 || columns.iter().any(|col| col.len() != m) {
        return Err(Error::Validation("inconsistent L1 system".into()));
    }
    let mut rows = vec![vec![0.0f64; 2 * k]; m];
    for (bi, col) in columns.iter().enumerate() {
        for i in 0..m {
            rows[i][bi] = col[i];
            rows[i][k + bi] = -col[i];
        }
    }
    let c = vec![1.0f64; 2 * k];
    let sol = solve_lp(&c, &rows, target)?;
    let q: Vec<f64> = (0..k).map(|bi| sol.x[bi] - sol.x[k + bi]).collect();
    Ok((q, sol.objective))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_textbook_lp() {
        // min -3x - 5y s.t. x + 2y + s1 = 14, 3x - y + s2 = 0 ... use
        // equalities directly: x + y = 4, x - y = 2, min x - 2y
        // -> x = 3, y = 1, obj = 1.
        let rows = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let sol = solve_lp(&[1.0, -2.0], &rows, &[4.0, 2.0]).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn handles_negative_rhs_and_redundant_rows() {
        // Same system with one row negated and one duplicate row.
        let rows = vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![2.0, 2.0]];
        let sol = solve_lp(&[1.0, -2.0], &rows, &[-4.0, 2.0, 8.0]).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        let rows = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let err = solve_lp(&[1.0, 1.0], &rows, &[1.0, 2.0]);
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn l1_matches_hand_solution() {
        // Represent target (1, -1) in columns (1, 0), (0, 1), (1, 1):
        // optimum q = (2, 0, -1)? |2|+|1| = 3 vs q = (1, -1, 0): L1 = 2.
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let (q, l1) = l1_decomposition(&cols, &[1.0, -1.0]).unwrap();
        assert!((l1 - 2.0).abs() < 1e-9);
        let recon = [q[0] + q[2], q[1] + q[2]];
        assert!((recon[0] - 1.0).abs() < 1e-9);
        assert!((recon[1] + 1.0).abs() < 1e-9);
    }
}
