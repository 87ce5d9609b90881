//! Matrix normal draws `X = M + U^{1/2} G V^{1/2}`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::eigen::{sym_sqrt, SpdMatrix};
use crate::linalg::matrix::DenseMatrix;
use crate::scalar::Real;

/// Matrix normal law `MN(M, U, V)` with the square roots cached, so repeated
/// draws cost two matrix products each.
#[derive(Debug, Clone)]
pub struct MatrixNormal<T> {
    mean: DenseMatrix<T>,
    u_root: DenseMatrix<T>,
    v_root: DenseMatrix<T>,
}

impl<T: Real> MatrixNormal<T> {
    pub fn new(mean: DenseMatrix<T>, u: &SpdMatrix<T>, v: &SpdMatrix<T>) -> Result<Self> {
        if mean.rows() != u.dim() || mean.cols() != v.dim() {
            return Err(Error::DimensionMismatch {
                expected: (u.dim(), v.dim()),
                got: mean.shape(),
            });
        }
        Ok(Self {
            mean,
            u_root: sym_sqrt(u)?,
            v_root: sym_sqrt(v)?,
        })
    }

    pub fn mean(&self) -> &DenseMatrix<T> {
        &self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DenseMatrix<T> {
        let (p, q) = self.mean.shape();
        let g = standard_normal_matrix(p, q, rng);
        let x = self
            .u_root
            .matmul(&g)
            .and_then(|ug| ug.matmul(&self.v_root))
            .expect("shapes checked at construction");
        x.add(&self.mean).expect("shapes checked at construction")
    }
}

/// One-off draw from `MN(mu, U, V)`. Prefer [`MatrixNormal`] for repeated
/// sampling.
pub fn sample_matrix_normal<T: Real, R: Rng + ?Sized>(
    mu: &DenseMatrix<T>,
    u: &SpdMatrix<T>,
    v: &SpdMatrix<T>,
    rng: &mut R,
) -> Result<DenseMatrix<T>> {
    Ok(MatrixNormal::new(mu.clone(), u, v)?.sample(rng))
}

/// i.i.d. N(0, 1) entries, filled row by row. Draws are made in `f64` and
/// converted so the stream is identical for every scalar type.
pub fn standard_normal_matrix<T: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DenseMatrix<T> {
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        T::from_f64(z).expect("normal draw representable")
    })
}
