#![allow(dead_code)]

use matfdp_core::linalg::{corr_from_cov, DenseMatrix, SpdMatrix};
use matfdp_core::{Dataset, Matrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random correlation matrix with a few strong directions.
pub fn random_corr(n: usize, rng: &mut impl Rng) -> SpdMatrix<f64> {
    let k = 1 + rng.random_range(0..n.min(3));
    let b = normal_matrix(n, k, rng);
    let mut c = b.matmul(&b.transpose()).unwrap();
    for i in 0..n {
        c[(i, i)] += 0.3 + rng.random::<f64>();
    }
    corr_from_cov(&SpdMatrix::new(c).unwrap()).unwrap()
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Eigenvalues sorted non-increasing, and the eigenvectors in that order.
pub fn dense_eigen(m: &Matrix) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(to_na(m));
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].partial_cmp(&e.eigenvalues[a]).unwrap());
    let vals = order.iter().map(|&k| e.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(m.rows(), order.len(), |i, j| e.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Dataset drawn with independent standard normal entries plus a mean
/// shift on the first cells of the treatment group.
pub fn random_dataset(p: usize, q: usize, n: usize, m: usize, rng: &mut impl Rng) -> Dataset {
    let shift = |x: Matrix| DenseMatrix::from_fn(p, q, |i, j| x[(i, j)] + if i + j < 2 { 1.0 } else { 0.0 });
    let t = (0..n).map(|_| shift(normal_matrix(p, q, rng))).collect();
    let c = (0..m).map(|_| normal_matrix(p, q, rng)).collect();
    Dataset::new(t, c).unwrap()
}

/// Dataset with matrix-normal noise `U^{1/2} G V^{1/2}`.
pub fn correlated_dataset(
    u: &SpdMatrix<f64>,
    v: &SpdMatrix<f64>,
    n: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Dataset {
    let mn = matfdp_core::linalg::MatrixNormal::new(Matrix::zeros(u.dim(), v.dim()), u, v).unwrap();
    let t = (0..n).map(|_| mn.sample(rng)).collect();
    let c = (0..m).map(|_| mn.sample(rng)).collect();
    Dataset::new(t, c).unwrap()
}
