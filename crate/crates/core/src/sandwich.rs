//! Sandwich estimator: separate leading factors for rows and columns,
//! `X ≈ Ĉ W̃ D̂`, evaluated without ever forming `D̂ᵀ ⊗ Ĉ`.

use crate::covfactor::{build_sandwich_loadings, CorrEstimates, SandwichLoadings};
use crate::error::{Error, Result};
use crate::fdp::{expected_false_rejections, ratio_to_rejections};
use crate::linalg::DenseMatrix;
use crate::noodle::FactorEstimator;
use crate::scalar::Real;
use crate::teststats::TruthMask;
use crate::trimreg::{trimmed_l1_fit, TrimmedFit};

#[derive(Debug, Clone)]
pub struct SandwichFit<T> {
    pub loadings: SandwichLoadings<T>,
    /// `k1 × k2` realized factor matrix `W̃`.
    pub w_tilde: DenseMatrix<T>,
    /// `p × q` matrix of `η̂_l`.
    pub eta_hat: DenseMatrix<T>,
    pub trim: Option<TrimmedFit<T>>,
}

impl<T: Real> SandwichFit<T> {
    pub fn d_hat(&self, i: usize, j: usize) -> T {
        self.loadings.d_hat(i, j)
    }
}

/// `Ĉ W D̂`.
pub fn sandwich_eta<T: Real>(sl: &SandwichLoadings<T>, w: &DenseMatrix<T>) -> DenseMatrix<T> {
    let cw = sl.c_hat.matmul(w).expect("k1 × k2 factor matrix");
    cw.matmul(&sl.d_hat_t.transpose()).expect("consistent shapes")
}

pub fn fit_sandwich<T: Real>(
    x: &DenseMatrix<T>,
    sl: &SandwichLoadings<T>,
    estimator: FactorEstimator,
) -> Result<SandwichFit<T>> {
    let (p, q) = sl.dims();
    if x.shape() != (p, q) {
        return Err(Error::DimensionMismatch {
            expected: (p, q),
            got: x.shape(),
        });
    }
    match estimator {
        FactorEstimator::LeastSquares => {
            // S = Nᵀ X G, so P₁ X P₂ = N S Gᵀ
            let s = sl
                .nu
                .transpose()
                .matmul(x)
                .and_then(|nx| nx.matmul(&sl.gamma))?;
            let eta_hat = sl.nu.matmul(&s)?.matmul(&sl.gamma.transpose())?;
            let lam = sl.c_hat.cols();
            let root = |m: &DenseMatrix<T>, k: usize| {
                let sq: T = (0..m.rows()).map(|i| m[(i, k)] * m[(i, k)]).sum();
                sq.sqrt()
            };
            let rl: Vec<T> = (0..lam).map(|b| root(&sl.c_hat, b)).collect();
            let rx: Vec<T> = (0..sl.k2).map(|a| root(&sl.d_hat_t, a)).collect();
            let w_tilde = DenseMatrix::from_fn(sl.k1, sl.k2, |b, a| {
                let d = rl[b] * rx[a];
                if d > T::zero() {
                    s[(b, a)] / d
                } else {
                    T::zero()
                }
            });
            Ok(SandwichFit {
                loadings: sl.clone(),
                w_tilde,
                eta_hat,
                trim: None,
            })
        }
        FactorEstimator::TrimmedL1(spec) => {
            let fit = trimmed_l1_fit(&x.vec(), sl, spec)?;
            let w_tilde = if fit.w.is_empty() {
                DenseMatrix::zeros(sl.k1, sl.k2)
            } else {
                DenseMatrix::from_vec_col_major(sl.k1, sl.k2, &fit.w)
            };
            Ok(SandwichFit {
                loadings: sl.clone(),
                eta_hat: sandwich_eta(sl, &w_tilde),
                w_tilde,
                trim: Some(fit),
            })
        }
    }
}

fn sandwich_sum<T: Real>(
    sl: &SandwichLoadings<T>,
    eta: &DenseMatrix<T>,
    include: impl Fn(usize, usize) -> bool + Sync,
    r: usize,
    t: T,
) -> T {
    let (p, q) = sl.dims();
    if r == 0 {
        return T::zero();
    }
    let n = p * q;
    // row-major cell order here; the sum is over the same set of cells
    let sum = expected_false_rejections(
        n,
        t,
        |c| {
            let (i, j) = (c / q, c % q);
            (sl.d_hat(i, j), eta[(i, j)])
        },
        |c| include(c / q, c % q),
    );
    ratio_to_rejections(sum, n, r)
}

/// `FDP̂₂(t) = R⁻¹ Σ_l [Φ(d̂_l(z_{t/2}+η̂_l)) + Φ(d̂_l(z_{t/2}-η̂_l))]`.
pub fn fdp_sandwich<T: Real>(fit: &SandwichFit<T>, r: usize, t: T) -> T {
    sandwich_sum(&fit.loadings, &fit.eta_hat, |_, _| true, r, t)
}

/// Oracle form with the true correlations, factor counts and realized
/// `W̃`, summed over the true nulls.
pub fn fdp_oracle_sandwich<T: Real>(
    truth: &CorrEstimates<T>,
    w_tilde: &DenseMatrix<T>,
    mask: &TruthMask,
    r: usize,
    t: T,
) -> Result<T> {
    let (k1, k2) = w_tilde.shape();
    let sl = build_sandwich_loadings(truth, Some(k1), Some(k2))?;
    if mask.dims() != sl.dims() {
        return Err(Error::DimensionMismatch {
            expected: sl.dims(),
            got: mask.dims(),
        });
    }
    let eta = sandwich_eta(&sl, w_tilde);
    Ok(sandwich_sum(&sl, &eta, |i, j| mask.is_null(i, j), r, t))
}

/// `FDP_A,2`: the oracle sum over every cell.
pub fn fdp_approx_sandwich<T: Real>(
    truth: &CorrEstimates<T>,
    w_tilde: &DenseMatrix<T>,
    r: usize,
    t: T,
) -> Result<T> {
    let (p, q) = truth.dims();
    fdp_oracle_sandwich(truth, w_tilde, &TruthMask::all_null(p, q), r, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdMatrix;

    fn corr3() -> SpdMatrix<f64> {
        SpdMatrix::new(DenseMatrix::from_rows(&[
            &[1.0, 0.6, 0.3],
            &[0.6, 1.0, 0.5],
            &[0.3, 0.5, 1.0],
        ]))
        .unwrap()
    }

    fn corr2() -> SpdMatrix<f64> {
        SpdMatrix::new(DenseMatrix::from_rows(&[&[1.0, -0.4], &[-0.4, 1.0]])).unwrap()
    }

    #[test]
    fn no_factors_zero_eta() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let sl = build_sandwich_loadings(&ce, Some(0), Some(0)).unwrap();
        let x = DenseMatrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let fit = fit_sandwich(&x, &sl, FactorEstimator::LeastSquares).unwrap();
        assert!(fit.eta_hat.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rank_one_fixed_point() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let sl = build_sandwich_loadings(&ce, Some(1), Some(1)).unwrap();
        let x = DenseMatrix::from_fn(3, 2, |i, j| sl.nu[(i, 0)] * sl.gamma[(j, 0)]);
        let fit = fit_sandwich(&x, &sl, FactorEstimator::LeastSquares).unwrap();
        assert!(fit.eta_hat.max_abs_diff(&x) < 1e-14);
        let w_expected = 1.0 / (ce.eig1.values[0] * ce.eig2.values[0]).sqrt();
        assert!((fit.w_tilde[(0, 0)] - w_expected).abs() < 1e-12);
    }

    #[test]
    fn ls_w_reproduces_eta() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let sl = build_sandwich_loadings(&ce, Some(2), Some(2)).unwrap();
        let x = DenseMatrix::from_fn(3, 2, |i, j| ((i * 5 + j * 3) % 4) as f64 - 1.2);
        let fit = fit_sandwich(&x, &sl, FactorEstimator::LeastSquares).unwrap();
        assert!(sandwich_eta(&sl, &fit.w_tilde).max_abs_diff(&fit.eta_hat) < 1e-12);
    }

    #[test]
    fn independent_case_closed_form() {
        let ce = CorrEstimates::from_matrices(SpdMatrix::<f64>::identity(3), SpdMatrix::identity(4), 2).unwrap();
        let sl = build_sandwich_loadings(&ce, Some(0), Some(0)).unwrap();
        let x = DenseMatrix::from_fn(3, 4, |i, j| i as f64 * 0.3 - j as f64);
        let fit = fit_sandwich(&x, &sl, FactorEstimator::LeastSquares).unwrap();
        assert!((fdp_sandwich(&fit, 5, 0.02) - 12.0 * 0.02 / 5.0).abs() < 1e-14);
        assert_eq!(fdp_sandwich(&fit, 0, 0.02), 0.0);
    }

    #[test]
    fn oracle_conventions() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let w = DenseMatrix::from_rows(&[&[0.4]]);
        let none = TruthMask::new(3, 2, vec![false; 6]).unwrap();
        assert_eq!(fdp_oracle_sandwich(&ce, &w, &none, 3, 0.05).unwrap(), 0.0);
        let indep = CorrEstimates::from_matrices(SpdMatrix::<f64>::identity(3), SpdMatrix::identity(2), 2).unwrap();
        let mask = TruthMask::new(3, 2, vec![true, true, false, true, true, true]).unwrap();
        let w0 = DenseMatrix::zeros(0, 0);
        let got: f64 = fdp_oracle_sandwich(&indep, &w0, &mask, 4, 0.1).unwrap();
        assert!((got - 5.0 * 0.1 / 4.0).abs() < 1e-14);
    }
}
