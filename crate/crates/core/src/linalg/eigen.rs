//! Symmetric eigendecomposition and the positive semidefinite wrapper.
//!
//! The solver is the classical Householder tridiagonalization followed by
//! implicit QL iterations (the EISPACK `tred2`/`tql2` pair). It is O(n³)
//! with a small constant, which keeps the 500×500 correlation estimates
//! well under a second.

use crate::error::{Error, Result};
use crate::linalg::matrix::DenseMatrix;
use crate::scalar::{lit, Real};

/// Components below this magnitude are skipped when fixing eigenvector signs.
const SIGN_EPS: f64 = 1e-12;

/// Relative tolerance for treating a slightly negative eigenvalue as zero.
const PSD_RELATIVE_TOL: f64 = 1e-8;

const MAX_QL_ITERATIONS: usize = 64;

/// A symmetric, numerically positive semidefinite matrix.
///
/// Construction checks finiteness and symmetry and then averages the two
/// triangles so downstream code sees an exactly symmetric array.
/// Semidefiniteness is verified by the consumers that need it
/// ([`sym_sqrt`], [`SpdMatrix::check_psd`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix<T> {
    inner: DenseMatrix<T>,
}

impl<T: Real> SpdMatrix<T> {
    pub fn new(m: DenseMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidMatrix(format!(
                "expected square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        for &x in m.data() {
            if !x.is_finite() {
                return Err(Error::InvalidMatrix("non-finite entry".into()));
            }
        }
        let n = m.rows();
        let tol = symmetry_tol::<T>();
        let mut m = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > tol * T::one().max(a.abs()) {
                    return Err(Error::InvalidMatrix(format!(
                        "not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                let avg = (a + b) * lit(0.5);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(Self { inner: m })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DenseMatrix::identity(n),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.inner
    }

    /// Eigendecomposition plus the semidefiniteness check.
    pub fn check_psd(&self) -> Result<EigenSystem<T>> {
        let eig = sym_eigen(self)?;
        check_spectrum(&eig.values)?;
        Ok(eig)
    }

    /// Builds from a matrix that is symmetric by construction; only the
    /// upper triangle is read.
    pub(crate) fn from_upper(mut m: DenseMatrix<T>) -> Self {
        m.mirror_upper();
        Self { inner: m }
    }
}

fn symmetry_tol<T: Real>() -> T {
    let base: T = lit(1e-12);
    base.max(T::epsilon() * lit(16.0))
}

fn check_spectrum<T: Real>(values: &[T]) -> Result<()> {
    let largest = values.first().copied().unwrap_or_else(T::zero);
    let smallest = values.last().copied().unwrap_or_else(T::zero);
    let floor = -lit::<T>(PSD_RELATIVE_TOL) * largest.max(T::zero());
    if smallest < floor {
        return Err(Error::NotPsd {
            eigenvalue: smallest.to_f64().unwrap_or(f64::NAN),
            largest: largest.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Eigenvalues in non-increasing order with the matching orthonormal
/// eigenvectors stored as the columns of `vectors`.
///
/// Each eigenvector's first component with magnitude above `1e-12` is
/// positive, so decompositions are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

impl<T: Real> EigenSystem<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k)
    }

    /// `Σ_k values_k v_k v_kᵀ`
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let scaled = DenseMatrix::from_fn(n, n, |i, k| self.vectors[(i, k)] * self.values[k]);
        scaled
            .matmul(&self.vectors.transpose())
            .expect("square factors")
    }

    /// Orthogonal projector onto the span of the leading `k` eigenvectors.
    pub fn leading_projector(&self, k: usize) -> DenseMatrix<T> {
        let n = self.dim();
        let mut proj = DenseMatrix::zeros(n, n);
        for c in 0..k.min(n) {
            for i in 0..n {
                let vi = self.vectors[(i, c)];
                if vi == T::zero() {
                    continue;
                }
                for j in 0..n {
                    proj[(i, j)] += vi * self.vectors[(j, c)];
                }
            }
        }
        proj
    }
}

/// Symmetric eigendecomposition.
pub fn sym_eigen<T: Real>(m: &SpdMatrix<T>) -> Result<EigenSystem<T>> {
    let n = m.dim();
    let mut v: Vec<Vec<T>> = (0..n).map(|i| m.matrix().row(i).to_vec()).collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);

    // tql2 rotates pairs of eigenvector columns; holding them as rows keeps
    // those updates contiguous.
    let mut vt: Vec<Vec<T>> = (0..n).map(|k| (0..n).map(|i| v[i][k]).collect()).collect();
    drop(v);
    tql2(&mut vt, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));

    let values: Vec<T> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    let sign_eps: T = lit(SIGN_EPS);
    for (c, &k) in order.iter().enumerate() {
        let col = &vt[k];
        let flip = col
            .iter()
            .find(|x| x.abs() > sign_eps)
            .is_some_and(|x| *x < T::zero());
        for i in 0..n {
            vectors[(i, c)] = if flip { -col[i] } else { col[i] };
        }
    }
    Ok(EigenSystem { values, vectors })
}

/// Symmetric square root `V diag(√λ) Vᵀ`. Eigenvalues in
/// `[-1e-8·λ_max, 0)` are clamped to zero; anything more negative fails.
pub fn sym_sqrt<T: Real>(m: &SpdMatrix<T>) -> Result<DenseMatrix<T>> {
    let eig = m.check_psd()?;
    let n = eig.dim();
    let roots: Vec<T> = eig.values.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
    let scaled = DenseMatrix::from_fn(n, n, |i, k| eig.vectors[(i, k)] * roots[k]);
    let mut out = scaled.matmul(&eig.vectors.transpose())?;
    // Exact symmetry; the product is symmetric up to rounding.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (out[(i, j)] + out[(j, i)]) * lit(0.5);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}

/// Rescales a covariance matrix to unit diagonal.
pub fn corr_from_cov<T: Real>(c: &SpdMatrix<T>) -> Result<SpdMatrix<T>> {
    let n = c.dim();
    let diag = c.matrix().diag();
    for (i, &d) in diag.iter().enumerate() {
        if !(d > T::zero()) {
            return Err(Error::DegenerateVariance { row: i, col: i });
        }
    }
    let inv_sd: Vec<T> = diag.iter().map(|d| T::one() / d.sqrt()).collect();
    let mut out = DenseMatrix::from_fn(n, n, |i, j| c.matrix()[(i, j)] * inv_sd[i] * inv_sd[j]);
    for i in 0..n {
        out[(i, i)] = T::one();
    }
    Ok(SpdMatrix::from_upper(out))
}

/// Householder reduction of the symmetric matrix in `v` to tridiagonal form.
/// On return `d` holds the diagonal, `e[1..]` the sub-diagonal and `v` the
/// accumulated orthogonal transform.
fn tred2<T: Real>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    let zero = T::zero();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }

            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[k][j] -= upd;
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[k][j] -= upd;
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;
}

/// Implicit QL iterations on the tridiagonal matrix from [`tred2`]. `vt`
/// holds the transform transposed (eigenvectors as rows).
fn tql2<T: Real>(vt: &mut [Vec<T>], d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let zero = T::zero();
    let two: T = lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::InvalidMatrix(
                        "symmetric eigensolver did not converge".into(),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = vt.split_at_mut(i + 1);
                    let (vi, vi1) = (&mut lo[i], &mut hi[0]);
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}
