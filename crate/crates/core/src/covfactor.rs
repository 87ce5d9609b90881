//! Row/column correlation estimates, factor-count selection and the factor
//! loadings consumed by the noodle and sandwich estimators.
//!
//! Cell `(i, j)` of a `p × q` statistic matrix sits at position
//! `l = j·p + i` of `vec(X)`; every per-cell array here uses that order.

use crate::error::{Error, Result};
use crate::linalg::matrix::{accumulate_aat_upper, accumulate_ata_upper};
use crate::linalg::{kron_eigenpairs, sym_eigen, DenseMatrix, EigenSystem, KronEigenpair, SpdMatrix};
use crate::scalar::{count, lit, Real};
use crate::teststats::TwoSampleDataset;
use crate::trimreg::LoadingRows;

/// Eigenvalues below this fraction of the largest are ignored by the
/// automatic factor-count selection.
const TAIL_CUTOFF: f64 = 1e-12;

/// Pooled correlation estimates `Σ̂₁` (p×p) and `Σ̂₂` (q×q) with their
/// eigensystems.
#[derive(Debug, Clone)]
pub struct CorrEstimates<T> {
    pub sigma1_hat: SpdMatrix<T>,
    pub sigma2_hat: SpdMatrix<T>,
    pub eig1: EigenSystem<T>,
    pub eig2: EigenSystem<T>,
    /// Cap used when factor counts are selected automatically.
    pub max_factors: usize,
}

impl<T: Real> CorrEstimates<T> {
    /// Wraps known correlation matrices, e.g. the population values in a
    /// simulation.
    pub fn from_matrices(
        sigma1: SpdMatrix<T>,
        sigma2: SpdMatrix<T>,
        max_factors: usize,
    ) -> Result<Self> {
        let eig1 = sym_eigen(&sigma1)?;
        let eig2 = sym_eigen(&sigma2)?;
        Ok(Self {
            sigma1_hat: sigma1,
            sigma2_hat: sigma2,
            eig1,
            eig2,
            max_factors,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.sigma1_hat.dim(), self.sigma2_hat.dim())
    }
}

/// Pooled sample correlation estimators
///
/// `Σ̂₁ = [(n+m-2) q]⁻¹ Σ_obs A Aᵀ` and `Σ̂₂ = [(n+m-2) p]⁻¹ Σ_obs Aᵀ A`
///
/// where `A = (obs - group mean) ∘ Σ̂` runs over all treatment and control
/// observations. The diagonals are 1 by construction.
pub fn estimate_correlations<T: Real>(
    ds: &TwoSampleDataset<T>,
    sigma_hat: &DenseMatrix<T>,
) -> Result<CorrEstimates<T>> {
    let (p, q) = ds.dims();
    if sigma_hat.shape() != (p, q) {
        return Err(Error::DimensionMismatch {
            expected: (p, q),
            got: sigma_hat.shape(),
        });
    }
    if let Some(pos) = sigma_hat.data().iter().position(|&s| !(s > T::zero())) {
        return Err(Error::DegenerateVariance {
            row: pos / q,
            col: pos % q,
        });
    }
    let inv_sigma = sigma_hat.map(|s| T::one() / s);
    let mut acc1 = DenseMatrix::zeros(p, p);
    let mut acc2 = DenseMatrix::zeros(q, q);
    ds.for_each_centered(|resid| {
        let a = resid.hadamard(&inv_sigma).expect("validated shapes");
        accumulate_aat_upper(&mut acc1, &a);
        accumulate_ata_upper(&mut acc2, &a);
    });
    let dof: T = count(ds.dof());
    let s1 = SpdMatrix::from_upper(acc1.scale(T::one() / (dof * count(q))));
    let s2 = SpdMatrix::from_upper(acc2.scale(T::one() / (dof * count(p))));
    CorrEstimates::from_matrices(s1, s2, ds.default_max_factors())
}

/// Eigenvalue-ratio estimator: the `l` in `1..=l_max` maximizing
/// `values[l] / values[l+1]` (1-indexed), smallest `l` on ties.
pub fn eigenvalue_ratio<T: Real>(values: &[T], l_max: usize) -> Result<usize> {
    if l_max == 0 {
        return Err(Error::InvalidArgument("l_max must be at least 1".into()));
    }
    if values.len() < l_max + 1 {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue ratio needs {} values, got {}",
            l_max + 1,
            values.len()
        )));
    }
    if let Some(index) = values[..=l_max].iter().position(|&v| !(v > T::zero())) {
        return Err(Error::NonPositiveEigenvalue {
            index,
            value: values[index].to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut best = 1;
    let mut best_ratio = values[0] / values[1];
    for l in 2..=l_max {
        let ratio = values[l - 1] / values[l];
        if ratio > best_ratio {
            best = l;
            best_ratio = ratio;
        }
    }
    Ok(best)
}

/// Automatic factor count: [`eigenvalue_ratio`] restricted to the values
/// at or above `1e-12 · values[0]`, with `l_max` capped to fit.
///
/// When only one value survives the cutoff the spectrum is rank one and a
/// single factor is returned.
pub fn select_factor_count<T: Real>(values: &[T], l_max: usize) -> Result<usize> {
    let Some(&top) = values.first() else {
        return Ok(0);
    };
    if !(top > T::zero()) {
        return Err(Error::NonPositiveEigenvalue {
            index: 0,
            value: top.to_f64().unwrap_or(f64::NAN),
        });
    }
    let cutoff = lit::<T>(TAIL_CUTOFF) * top;
    let usable = values.iter().take_while(|&&v| v >= cutoff && v > T::zero()).count();
    let cap = l_max.min(usable.saturating_sub(1));
    if cap == 0 {
        return Ok(usable.min(1).min(l_max));
    }
    eigenvalue_ratio(&values[..usable], cap)
}

#[inline]
fn clamp_norm<T: Real>(v: T) -> T {
    v.max(T::zero()).min(T::one() - T::loading_margin())
}

/// `(1 - ‖b‖²)^{-1/2}` for an already clamped squared norm.
#[inline]
pub fn inflation<T: Real>(norm_sq: T) -> T {
    T::one() / (T::one() - norm_sq).sqrt()
}

/// Noodle factor loadings: the leading `h` eigenpairs of `Σ̂₂ ⊗ Σ̂₁`.
///
/// Only the factor eigenvectors `ν̂_i` and `γ̂_j` are stored; column `k` of
/// `F̂` is `√θ̂_k (γ̂_{j(k)} ⊗ ν̂_{i(k)})`.
#[derive(Debug, Clone)]
pub struct NoodleLoadings<T> {
    pub h: usize,
    pub factors: Vec<KronEigenpair<T>>,
    pub nu: Vec<Vec<T>>,
    pub gamma: Vec<Vec<T>>,
    /// `‖f̂_l‖²` in `vec` order, clamped to `[0, 1 - 1e-8]`.
    pub row_norms_sq: Vec<T>,
    p: usize,
    q: usize,
}

impl<T: Real> NoodleLoadings<T> {
    pub fn dims(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn theta(&self) -> Vec<T> {
        self.factors.iter().map(|f| f.value).collect()
    }

    /// Entry `l` of the unit eigenvector `ρ̂_k`.
    #[inline]
    pub fn rho(&self, k: usize, l: usize) -> T {
        self.gamma[k][l / self.p] * self.nu[k][l % self.p]
    }

    pub fn inflation(&self, l: usize) -> T {
        inflation(self.row_norms_sq[l])
    }
}

impl<T: Real> LoadingRows<T> for NoodleLoadings<T> {
    fn n_rows(&self) -> usize {
        self.p * self.q
    }

    fn n_factors(&self) -> usize {
        self.h
    }

    fn row_into(&self, l: usize, out: &mut [T]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.factors[k].value.max(T::zero()).sqrt() * self.rho(k, l);
        }
    }
}

/// Builds the noodle loadings. With `h = None` the count is chosen by
/// [`select_factor_count`] over the sorted Kronecker products.
pub fn build_noodle_loadings<T: Real>(
    ce: &CorrEstimates<T>,
    h: Option<usize>,
) -> Result<NoodleLoadings<T>> {
    let (p, q) = ce.dims();
    let index = kron_eigenpairs(&ce.eig1, &ce.eig2);
    let h = match h {
        Some(h) => h,
        None => select_factor_count(&index.values(), ce.max_factors)?,
    };
    if h > p * q {
        return Err(Error::InvalidFactorCount {
            requested: h,
            max: p * q,
        });
    }
    let factors: Vec<_> = index.pairs()[..h].to_vec();
    let nu: Vec<Vec<T>> = factors.iter().map(|f| ce.eig1.vector(f.i)).collect();
    let gamma: Vec<Vec<T>> = factors.iter().map(|f| ce.eig2.vector(f.j)).collect();

    let mut row_norms_sq = vec![T::zero(); p * q];
    for (k, f) in factors.iter().enumerate() {
        let theta = f.value;
        for c in 0..q {
            let g2 = gamma[k][c] * gamma[k][c] * theta;
            let out = &mut row_norms_sq[c * p..(c + 1) * p];
            for (o, &v) in out.iter_mut().zip(&nu[k]) {
                *o += g2 * v * v;
            }
        }
    }
    for v in &mut row_norms_sq {
        *v = clamp_norm(*v);
    }
    Ok(NoodleLoadings {
        h,
        factors,
        nu,
        gamma,
        row_norms_sq,
        p,
        q,
    })
}

/// Sandwich loadings: leading `k1` eigenpairs of `Σ̂₁` and `k2` of `Σ̂₂`.
#[derive(Debug, Clone)]
pub struct SandwichLoadings<T> {
    pub k1: usize,
    pub k2: usize,
    /// `p × k1`, columns `√λ̂_b ν̂_b`.
    pub c_hat: DenseMatrix<T>,
    /// `q × k2`, columns `√ξ̂_a γ̂_a` (the transpose of `D̂`).
    pub d_hat_t: DenseMatrix<T>,
    /// `p × k1` unit eigenvectors `ν̂_b`.
    pub nu: DenseMatrix<T>,
    /// `q × k2` unit eigenvectors `γ̂_a`.
    pub gamma: DenseMatrix<T>,
    /// `Σ_b λ̂_b ν̂²_{b,i}` for each row `i`.
    pub col_part: Vec<T>,
    /// `Σ_a ξ̂_a γ̂²_{a,j}` for each column `j`.
    pub row_part: Vec<T>,
}

impl<T: Real> SandwichLoadings<T> {
    pub fn dims(&self) -> (usize, usize) {
        (self.c_hat.rows(), self.d_hat_t.rows())
    }

    /// `‖b̂_l‖²` for cell `(i, j)`, clamped to `[0, 1 - 1e-8]`.
    #[inline]
    pub fn row_norm_sq(&self, i: usize, j: usize) -> T {
        clamp_norm(self.col_part[i] * self.row_part[j])
    }

    /// `d̂_l = (1 - ‖b̂_l‖²)^{-1/2}` for cell `(i, j)`.
    #[inline]
    pub fn d_hat(&self, i: usize, j: usize) -> T {
        inflation(self.row_norm_sq(i, j))
    }
}

impl<T: Real> LoadingRows<T> for SandwichLoadings<T> {
    fn n_rows(&self) -> usize {
        self.c_hat.rows() * self.d_hat_t.rows()
    }

    fn n_factors(&self) -> usize {
        self.k1 * self.k2
    }

    /// Row `l = j·p + i` of `D̂ᵀ ⊗ Ĉ`; factor `a·k1 + b` is `vec(W̃)`'s
    /// entry `(b, a)`.
    fn row_into(&self, l: usize, out: &mut [T]) {
        let p = self.c_hat.rows();
        let (i, j) = (l % p, l / p);
        for a in 0..self.k2 {
            let d = self.d_hat_t[(j, a)];
            for b in 0..self.k1 {
                out[a * self.k1 + b] = d * self.c_hat[(i, b)];
            }
        }
    }
}

/// Builds the sandwich loadings. Missing counts are chosen by
/// [`select_factor_count`] on `λ̂` and `ξ̂` separately.
pub fn build_sandwich_loadings<T: Real>(
    ce: &CorrEstimates<T>,
    k1: Option<usize>,
    k2: Option<usize>,
) -> Result<SandwichLoadings<T>> {
    let (p, q) = ce.dims();
    let k1 = match k1 {
        Some(k) => k,
        None => select_factor_count(&ce.eig1.values, ce.max_factors)?,
    };
    let k2 = match k2 {
        Some(k) => k,
        None => select_factor_count(&ce.eig2.values, ce.max_factors)?,
    };
    if k1 > p {
        return Err(Error::InvalidFactorCount {
            requested: k1,
            max: p,
        });
    }
    if k2 > q {
        return Err(Error::InvalidFactorCount {
            requested: k2,
            max: q,
        });
    }
    let (nu, c_hat, col_part) = leading_part(&ce.eig1, k1);
    let (gamma, d_hat_t, row_part) = leading_part(&ce.eig2, k2);
    Ok(SandwichLoadings {
        k1,
        k2,
        c_hat,
        d_hat_t,
        nu,
        gamma,
        col_part,
        row_part,
    })
}

/// Leading `k` eigenvectors, the scaled loadings and the per-row
/// `Σ_b λ_b v_b[i]²`.
fn leading_part<T: Real>(
    eig: &EigenSystem<T>,
    k: usize,
) -> (DenseMatrix<T>, DenseMatrix<T>, Vec<T>) {
    let n = eig.dim();
    let vecs = DenseMatrix::from_fn(n, k, |i, b| eig.vectors[(i, b)]);
    let roots: Vec<T> = eig.values[..k].iter().map(|&v| v.max(T::zero()).sqrt()).collect();
    let scaled = DenseMatrix::from_fn(n, k, |i, b| eig.vectors[(i, b)] * roots[b]);
    let part = (0..n)
        .map(|i| (0..k).map(|b| scaled[(i, b)] * scaled[(i, b)]).sum())
        .collect();
    (vecs, scaled, part)
}
