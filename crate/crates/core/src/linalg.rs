//! Small dense/banded linear algebra kernels.
//!
//! Problem dimensions in this crate are tiny (a handful of ODE components,
//! reconstruction systems of size `q - 1 <= 11`), so a straightforward
//! partial-pivoting LU and a Thomas solve cover every need without pulling
//! in a matrix library.

use crate::{Error, Result};

/// Solves `A x = b` for several right-hand sides with one LU factorization.
///
/// `a` is row-major and consumed as factorization workspace; each column of
/// `rhs` (stored as separate vectors) is overwritten with its solution.
/// Returns a crude condition estimate (max |pivot| / min |pivot|) alongside,
/// so callers can report how close to singular the system was.
pub fn lu_solve_multi(a: &mut [Vec<f64>], rhs: &mut [Vec<f64>]) -> Result<f64> {
    let n = a.len();
    if n == 0 {
        return Ok(1.0);
    }
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert!(rhs.iter().all(|b| b.len() == n));

    let mut piv_max: f64 = 0.0;
    let mut piv_min = f64::INFINITY;

    for col in 0..n {
        // Partial pivoting on the current column.
        let mut pivot_row = col;
        let mut pivot_val = a[col][col].abs();
        for row in col + 1..n {
            let v = a[row][col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val == 0.0 || !pivot_val.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "singular {n}x{n} system (pivot {pivot_val:e} in column {col})"
            )));
        }
        if pivot_row != col {
            a.swap(col, pivot_row);
            for b in rhs.iter_mut() {
                b.swap(col, pivot_row);
            }
        }
        piv_max = piv_max.max(pivot_val);
        piv_min = piv_min.min(pivot_val);

        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            a[row][col] = 0.0;
            for k in col + 1..n {
                a[row][k] -= factor * a[col][k];
            }
            for b in rhs.iter_mut() {
                b[row] -= factor * b[col];
            }
        }
    }

    for b in rhs.iter_mut() {
        for row in (0..n).rev() {
            let mut s = b[row];
            for k in row + 1..n {
                s -= a[row][k] * b[k];
            }
            b[row] = s / a[row][row];
        }
    }
    Ok(piv_max / piv_min)
}

/// Solves `A x = b` for a single right-hand side; `b` holds the solution.
pub fn lu_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<()> {
    let mut rhs = vec![b.to_vec()];
    lu_solve_multi(a, &mut rhs)?;
    b.copy_from_slice(&rhs[0]);
    Ok(())
}

/// Thomas algorithm for a tridiagonal system given the full matrix rows.
///
/// Only the three central diagonals of `a` are read; the caller guarantees
/// everything else is zero (bandwidth-1 structure). `b` holds the solution
/// on return.
pub fn tridiagonal_solve(a: &[Vec<f64>], b: &mut [f64]) -> Result<()> {
    let n = a.len();
    if n == 0 {
        return Ok(());
    }
    let mut diag: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    let mut rhs = b.to_vec();

    for i in 1..n {
        let denom = diag[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "tridiagonal breakdown at row {i} (pivot {denom:e})"
            )));
        }
        let w = a[i][i - 1] / denom;
        diag[i] -= w * a[i - 1][i];
        rhs[i] -= w * rhs[i - 1];
    }
    let last = diag[n - 1];
    if last == 0.0 || !last.is_finite() {
        return Err(Error::NumericalFailure(
            "tridiagonal breakdown at final row".to_string(),
        ));
    }
    b[n - 1] = rhs[n - 1] / last;
    for i in (0..n - 1).rev() {
        b[i] = (rhs[i] - a[i][i + 1] * b[i + 1]) / diag[i];
    }
    Ok(())
}

/// `y += alpha * x` for equally sized slices.
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Euclidean dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximum absolute entry (`NaN`-propagating: returns NaN if any entry is NaN).
pub fn max_norm(v: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for &x in v {
        if x.is_nan() {
            return f64::NAN;
        }
        m = m.max(x.abs());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lu_solves_small_dense_system() {
        // 3x3 system with known solution x = [1, -2, 3].
        let a = vec![
            vec![2.0, 1.0, -1.0],
            vec![-3.0, -1.0, 2.0],
            vec![-2.0, 1.0, 2.0],
        ];
        let x_true = [1.0, -2.0, 3.0];
        let b: Vec<f64> = a.iter().map(|row| dot(row, &x_true)).collect();

        let mut work = a.clone();
        let mut rhs = vec![b];
        lu_solve_multi(&mut work, &mut rhs).unwrap();
        for (xi, ti) in rhs[0].iter().zip(&x_true) {
            assert_relative_eq!(xi, ti, max_relative = 1e-13);
        }
    }

    #[test]
    fn lu_rejects_singular_matrix() {
        let mut a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let mut rhs = vec![vec![1.0, 1.0]];
        assert!(lu_solve_multi(&mut a, &mut rhs).is_err());
    }

    #[test]
    fn lu_handles_multiple_right_hand_sides() {
        let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let mut work = a.clone();
        let mut rhs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        lu_solve_multi(&mut work, &mut rhs).unwrap();
        // Columns of the inverse of [[4,1],[1,3]] (det = 11).
        assert_relative_eq!(rhs[0][0], 3.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(rhs[0][1], -1.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(rhs[1][0], -1.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(rhs[1][1], 4.0 / 11.0, max_relative = 1e-14);
    }

    #[test]
    fn thomas_matches_dense_solve() {
        let n = 12;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 2.5 + 0.1 * i as f64;
            if i > 0 {
                a[i][i - 1] = -1.0;
            }
            if i + 1 < n {
                a[i][i + 1] = -0.7;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();

        let mut tri = b.clone();
        tridiagonal_solve(&a, &mut tri).unwrap();

        let mut dense_a = a.clone();
        let mut dense_b = b.clone();
        lu_solve(&mut dense_a, &mut dense_b).unwrap();

        for (x, y) in tri.iter().zip(&dense_b) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }
}
