//! PFA baseline on vectorized data.
//!
//! The `(pq) × (pq)` sample matrix `S = F Fᵀ` is never formed: its nonzero
//! eigenpairs come from the `(n+m) × (n+m)` Gram matrix `Fᵀ F`.

use rayon::prelude::*;

use crate::covfactor::{inflation, select_factor_count};
use crate::error::{Error, Result};
use crate::fdp::{expected_false_rejections, ratio_to_rejections};
use crate::linalg::{dot, sym_eigen, DenseMatrix, SpdMatrix};
use crate::scalar::{count, lit, Real};
use crate::teststats::{TestMatrix, TwoSampleDataset};

const GRAM_CUTOFF: f64 = 1e-12;

/// `F` stored as `Fᵀ`: one row per observation, `vec` order within a row.
#[derive(Debug, Clone)]
pub struct ThinFactor<T> {
    pub ft: DenseMatrix<T>,
    /// Nonzero eigenvalues of `S`, non-increasing.
    pub values: Vec<T>,
    /// Matching unit eigenvectors of `Fᵀ F`, one per column.
    pub gram_vectors: DenseMatrix<T>,
}

impl<T: Real> ThinFactor<T> {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn n_cells(&self) -> usize {
        self.ft.cols()
    }

    /// Eigenvector `k` of `S`: `F u_k / √s_k`.
    pub fn eigenvector(&self, k: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.n_cells()];
        let scale = T::one() / self.values[k].sqrt();
        for o in 0..self.ft.rows() {
            let c = self.gram_vectors[(o, k)] * scale;
            for (vi, &f) in v.iter_mut().zip(self.ft.row(o)) {
                *vi += c * f;
            }
        }
        v
    }
}

/// Centered observations scaled by `1/√(n+m-2)`, optionally divided
/// elementwise by `σ̂`.
pub fn build_thin_factor<T: Real>(
    ds: &TwoSampleDataset<T>,
    sigma_hat: Option<&DenseMatrix<T>>,
) -> Result<ThinFactor<T>> {
    let (p, q) = ds.dims();
    if let Some(s) = sigma_hat {
        if s.shape() != (p, q) {
            return Err(Error::DimensionMismatch {
                expected: (p, q),
                got: s.shape(),
            });
        }
    }
    let scale = T::one() / count::<T>(ds.dof()).sqrt();
    let inv = sigma_hat.map(|s| s.map(|v| T::one() / v));
    let mut rows = Vec::with_capacity((ds.n() + ds.m()) * p * q);
    ds.for_each_centered(|a| {
        let a = match &inv {
            Some(w) => a.hadamard(w).expect("validated shapes"),
            None => a.clone(),
        };
        rows.extend(a.vec().into_iter().map(|v| v * scale));
    });
    let ft = DenseMatrix::new(ds.n() + ds.m(), p * q, rows)?;
    thin_from_rows(ft)
}

fn thin_from_rows<T: Real>(ft: DenseMatrix<T>) -> Result<ThinFactor<T>> {
    let k = ft.rows();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let entries: Vec<T> = pairs
        .par_iter()
        .map(|&(a, b)| dot(ft.row(a), ft.row(b)))
        .collect();
    let mut gram = DenseMatrix::zeros(k, k);
    for (&(a, b), &v) in pairs.iter().zip(&entries) {
        gram[(a, b)] = v;
        gram[(b, a)] = v;
    }
    let eig = sym_eigen(&SpdMatrix::new(gram)?)?;
    let top = eig.values.first().copied().unwrap_or_else(T::zero);
    let cutoff = lit::<T>(GRAM_CUTOFF) * top.max(T::one());
    let rank = eig.values.iter().take_while(|&&v| v > cutoff).count();
    Ok(ThinFactor {
        ft,
        values: eig.values[..rank].to_vec(),
        gram_vectors: DenseMatrix::from_fn(k, rank, |i, j| eig.vectors[(i, j)]),
    })
}

#[derive(Debug, Clone)]
pub struct PfaFit<T> {
    pub h: usize,
    pub values: Vec<T>,
    /// `ζ̂_l` in `vec` order.
    pub zeta_hat: Vec<T>,
    /// `‖f̂_l‖²` in `vec` order, clamped like the other estimators.
    pub row_norms_sq: Vec<T>,
}

/// PFA on the standardized data behind `tm`. With `h = None` the factor
/// count is chosen by eigenvalue ratio up to `⌊0.2(n+m)⌋`.
pub fn fit_pfa<T: Real>(
    ds: &TwoSampleDataset<T>,
    tm: &TestMatrix<T>,
    h: Option<usize>,
) -> Result<PfaFit<T>> {
    let thin = build_thin_factor(ds, Some(&tm.sigma_hat))?;
    fit_pfa_thin(&thin, &tm.x, h, ds.default_max_factors())
}

pub fn fit_pfa_thin<T: Real>(
    thin: &ThinFactor<T>,
    x: &DenseMatrix<T>,
    h: Option<usize>,
    max_factors: usize,
) -> Result<PfaFit<T>> {
    let n = thin.n_cells();
    if x.rows() * x.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: (n, 1),
            got: x.shape(),
        });
    }
    let h = match h {
        Some(h) if h > thin.rank() => {
            return Err(Error::InvalidFactorCount {
                requested: h,
                max: thin.rank(),
            })
        }
        Some(h) => h,
        None => select_factor_count(&thin.values, max_factors)?,
    };
    let xv = x.vec();
    let mut zeta = vec![T::zero(); n];
    let mut norms = vec![T::zero(); n];
    for k in 0..h {
        let v = thin.eigenvector(k);
        let s = dot(&v, &xv);
        let val = thin.values[k];
        for l in 0..n {
            zeta[l] += s * v[l];
            norms[l] += val * v[l] * v[l];
        }
    }
    let top = T::one() - T::loading_margin();
    for v in &mut norms {
        *v = v.max(T::zero()).min(top);
    }
    Ok(PfaFit {
        h,
        values: thin.values.clone(),
        zeta_hat: zeta,
        row_norms_sq: norms,
    })
}

pub fn fdp_pfa<T: Real>(fit: &PfaFit<T>, r: usize, t: T) -> T {
    let n = fit.zeta_hat.len();
    if r == 0 {
        return T::zero();
    }
    let sum = expected_false_rejections(
        n,
        t,
        |l| (inflation(fit.row_norms_sq[l]), fit.zeta_hat[l]),
        |_| true,
    );
    ratio_to_rejections(sum, n, r)
}
