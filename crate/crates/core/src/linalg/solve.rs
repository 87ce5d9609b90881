//! Small symmetric solves for normal equations (a handful of unknowns).

use crate::linalg::eigen::{sym_eigen, SpdMatrix};
use crate::linalg::matrix::DenseMatrix;
use crate::scalar::{lit, Real};

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky.
/// Returns `None` when a pivot falls below `rel_tol · max diag(A)`.
pub fn cholesky_solve<T: Real>(a: &DenseMatrix<T>, b: &[T], rel_tol: T) -> Option<Vec<T>> {
    let n = a.rows();
    debug_assert!(a.is_square() && b.len() == n);
    let max_diag = a.diag().into_iter().fold(T::zero(), T::max);
    if !(max_diag > T::zero()) {
        return None;
    }
    let floor = rel_tol * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Some(x)
}

/// Minimum-norm solution of the symmetric system `A x = b` through the
/// eigendecomposition, dropping directions with eigenvalue at or below
/// `1e-12 · λ_max`.
pub fn pinv_solve<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Vec<T> {
    let n = a.rows();
    let Ok(spd) = SpdMatrix::new(a.clone()) else {
        return vec![T::zero(); n];
    };
    let Ok(eig) = sym_eigen(&spd) else {
        return vec![T::zero(); n];
    };
    let cutoff = lit::<T>(1e-12) * eig.values.first().copied().unwrap_or_else(T::zero);
    let mut x = vec![T::zero(); n];
    for (k, &val) in eig.values.iter().enumerate() {
        if !(val > cutoff) || !(val > T::zero()) {
            continue;
        }
        let proj: T = (0..n).map(|i| eig.vectors[(i, k)] * b[i]).sum();
        let coef = proj / val;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += coef * eig.vectors[(i, k)];
        }
    }
    x
}
