//! Small dense linear algebra used by the rate models and the bundle QP.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Log-determinant of the principal submatrix of the row-major `n x n`
/// matrix `a` selected by `idx`, via Cholesky. `None` if a pivot falls
/// below `tol`. The empty submatrix has determinant 1.
pub(crate) fn principal_log_det(a: &[f64], n: usize, idx: &[usize], tol: f64) -> Option<f64> {
    let k = idx.len();
    let mut l = vec![0.0; k * k];
    let mut log_det = 0.0;
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[idx[i] * n + idx[j]];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if s <= tol {
                    return None;
                }
                let d = math::sqrt(s);
                l[i * k + i] = d;
                log_det += 2.0 * math::ln(d);
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    Some(log_det)
}

/// Solves the dense system `m x = b` (row-major, `n x n`) by Gaussian
/// elimination with partial pivoting. Returns `None` when singular.
pub(crate) fn solve_dense(mut m: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= f * m[col * n + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for j in row + 1..n {
            s -= m[row * n + j] * x[j];
        }
        x[row] = s / m[row * n + row];
    }
    Some(x)
}
