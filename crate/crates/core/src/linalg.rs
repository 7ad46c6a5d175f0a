//! Small dense-matrix helpers: determinants, rank, and inversion generic
//! over the [`Scalar`] types (so metric inverses differentiate through).

use crate::autodiff::{EvalError, Scalar};

/// Determinant by LU decomposition with partial pivoting.
pub fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 1.0;
    }
    debug_assert!(m.iter().all(|row| row.len() == n), "matrix must be square");
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut sign = 1.0;
    let mut result = 1.0;
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_abs == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            sign = -sign;
        }
        let pivot = a[col][col];
        result *= pivot;
        for r in col + 1..n {
            let factor = a[r][col] / pivot;
            for c in col..n {
                let sub = factor * a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    sign * result
}

/// Rank by Gaussian elimination with partial pivoting; entries whose
/// magnitude stays at or below `tol` count as zero.
pub fn rank(m: &[Vec<f64>], tol: f64) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        let (pivot_row, pivot_abs) = (row..rows)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_abs <= tol {
            continue;
        }
        a.swap(pivot_row, row);
        let pivot = a[row][col];
        for r in row + 1..rows {
            let factor = a[r][col] / pivot;
            for c in col..cols {
                let sub = factor * a[row][c];
                a[r][c] -= sub;
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}

/// Matrix inverse by Gauss–Jordan elimination, generic over [`Scalar`] so the
/// result can carry derivatives. Pivots are chosen by largest value part;
/// a vanishing pivot yields [`EvalError::SingularMatrix`] with `context`.
pub fn invert<T: Scalar>(m: &[Vec<T>], context: &str) -> Result<Vec<Vec<T>>, EvalError> {
    let n = m.len();
    debug_assert!(m.iter().all(|row| row.len() == n), "matrix must be square");
    let mut a: Vec<Vec<T>> = m.to_vec();
    let one = match a.first().and_then(|r| r.first()) {
        Some(t) => t.const_like(1.0),
        None => return Ok(Vec::new()),
    };
    let zero = one.const_like(0.0);
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { one.clone() } else { zero.clone() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r][col].value().abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_abs == 0.0 {
            return Err(EvalError::SingularMatrix {
                context: context.to_string(),
            });
        }
        a.swap(pivot_row, col);
        inv.swap(pivot_row, col);
        let pivot = a[col][col].clone();
        for c in 0..n {
            a[col][c] = a[col][c].clone() / pivot.clone();
            inv[col][c] = inv[col][c].clone() / pivot.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            // Eliminate even when the value part of `factor` is zero: with
            // dual entries its derivative part can still be nonzero.
            let factor = a[r][col].clone();
            for c in 0..n {
                a[r][c] = a[r][c].clone() - factor.clone() * a[col][c].clone();
                inv[r][c] = inv[r][c].clone() - factor.clone() * inv[col][c].clone();
            }
        }
    }
    Ok(inv)
}

/// Max-norm of a matrix.
pub fn max_abs(m: &[Vec<f64>]) -> f64 {
    m.iter()
        .flat_map(|row| row.iter())
        .fold(0.0, |acc, &v| acc.max(v.abs()))
}
