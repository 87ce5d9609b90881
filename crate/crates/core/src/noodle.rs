//! Noodle estimator: factors from the full Kronecker eigenstructure of
//! `Σ̂₂ ⊗ Σ̂₁`.

use crate::covfactor::{build_noodle_loadings, CorrEstimates, NoodleLoadings};
use crate::error::{Error, Result};
use crate::fdp::{expected_false_rejections, ratio_to_rejections};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;
use crate::teststats::TruthMask;
use crate::trimreg::{trimmed_l1_fit, TrimSpec, TrimmedFit};

/// How the realized factors are estimated from `vec(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FactorEstimator {
    #[default]
    LeastSquares,
    TrimmedL1(TrimSpec),
}

#[derive(Debug, Clone)]
pub struct NoodleFit<T> {
    pub loadings: NoodleLoadings<T>,
    pub w_hat: Vec<T>,
    /// `ζ̂_l = f̂_lᵀ Ŵ` in `vec` order.
    pub zeta_hat: Vec<T>,
    pub trim: Option<TrimmedFit<T>>,
}

/// `s_k = ν̂_kᵀ X γ̂_k = ρ̂_kᵀ vec(X)`.
fn project<T: Real>(x: &DenseMatrix<T>, nu: &[T], gamma: &[T]) -> T {
    let mut s = T::zero();
    for (i, &v) in nu.iter().enumerate() {
        let row = x.row(i);
        let inner: T = row.iter().zip(gamma).map(|(&a, &b)| a * b).sum();
        s += v * inner;
    }
    s
}

/// `Σ_k c_k ρ̂_k` in `vec` order.
fn combine<T: Real>(nl: &NoodleLoadings<T>, coef: &[T]) -> Vec<T> {
    let (p, q) = nl.dims();
    let mut out = vec![T::zero(); p * q];
    for (k, &c) in coef.iter().enumerate() {
        for (j, &g) in nl.gamma[k].iter().enumerate() {
            let cg = c * g;
            for (o, &v) in out[j * p..(j + 1) * p].iter_mut().zip(&nl.nu[k]) {
                *o += cg * v;
            }
        }
    }
    out
}

/// `ζ_l = f_lᵀ W = Σ_k √θ_k ρ_lk W_k`.
pub fn noodle_zeta<T: Real>(nl: &NoodleLoadings<T>, w: &[T]) -> Vec<T> {
    let coef: Vec<T> = nl
        .factors
        .iter()
        .zip(w)
        .map(|(f, &wk)| f.value.max(T::zero()).sqrt() * wk)
        .collect();
    combine(nl, &coef)
}

pub fn fit_noodle<T: Real>(
    x: &DenseMatrix<T>,
    nl: &NoodleLoadings<T>,
    estimator: FactorEstimator,
) -> Result<NoodleFit<T>> {
    if x.shape() != nl.dims() {
        return Err(Error::DimensionMismatch {
            expected: nl.dims(),
            got: x.shape(),
        });
    }
    match estimator {
        FactorEstimator::LeastSquares => {
            let s: Vec<T> = (0..nl.h).map(|k| project(x, &nl.nu[k], &nl.gamma[k])).collect();
            // F̂ᵀF̂ = diag(θ̂); a zero θ̂_k leaves a zero column that carries no weight
            let w_hat = s
                .iter()
                .zip(&nl.factors)
                .map(|(&sk, f)| {
                    if f.value > T::zero() {
                        sk / f.value.sqrt()
                    } else {
                        T::zero()
                    }
                })
                .collect();
            let coef: Vec<T> = s
                .iter()
                .zip(&nl.factors)
                .map(|(&sk, f)| if f.value > T::zero() { sk } else { T::zero() })
                .collect();
            Ok(NoodleFit {
                loadings: nl.clone(),
                w_hat,
                zeta_hat: combine(nl, &coef),
                trim: None,
            })
        }
        FactorEstimator::TrimmedL1(spec) => {
            let fit = trimmed_l1_fit(&x.vec(), nl, spec)?;
            Ok(NoodleFit {
                loadings: nl.clone(),
                zeta_hat: noodle_zeta(nl, &fit.w),
                w_hat: fit.w.clone(),
                trim: Some(fit),
            })
        }
    }
}

/// `FDP̂₁(t) = R⁻¹ Σ_l [Φ(â_l(z_{t/2}+ζ̂_l)) + Φ(â_l(z_{t/2}-ζ̂_l))]`.
pub fn fdp_noodle<T: Real>(fit: &NoodleFit<T>, r: usize, t: T) -> T {
    let n = fit.zeta_hat.len();
    if r == 0 {
        return T::zero();
    }
    let nl = &fit.loadings;
    let sum = expected_false_rejections(n, t, |l| (nl.inflation(l), fit.zeta_hat[l]), |_| true);
    ratio_to_rejections(sum, n, r)
}

/// Oracle form with the true correlations and realized factors `w`,
/// summed over the true nulls only.
pub fn fdp_oracle_noodle<T: Real>(
    truth: &CorrEstimates<T>,
    h: usize,
    w: &[T],
    mask: &TruthMask,
    r: usize,
    t: T,
) -> Result<T> {
    if w.len() != h {
        return Err(Error::DimensionMismatch {
            expected: (h, 1),
            got: (w.len(), 1),
        });
    }
    let nl = build_noodle_loadings(truth, Some(h))?;
    Ok(oracle_sum(&nl, &noodle_zeta(&nl, w), mask, r, t))
}

/// `FDP_A,1`: the oracle sum over every cell.
pub fn fdp_approx_noodle<T: Real>(
    truth: &CorrEstimates<T>,
    h: usize,
    w: &[T],
    r: usize,
    t: T,
) -> Result<T> {
    let nl = build_noodle_loadings(truth, Some(h))?;
    let (p, q) = nl.dims();
    let all = TruthMask::all_null(p, q);
    Ok(oracle_sum(&nl, &noodle_zeta(&nl, w), &all, r, t))
}

fn oracle_sum<T: Real>(
    nl: &NoodleLoadings<T>,
    zeta: &[T],
    mask: &TruthMask,
    r: usize,
    t: T,
) -> T {
    let (p, q) = nl.dims();
    let n = p * q;
    if r == 0 {
        return T::zero();
    }
    // the mask is row-major, cells here are in vec order
    let nulls = mask.as_slice();
    let sum = expected_false_rejections(
        n,
        t,
        |l| (nl.inflation(l), zeta[l]),
        |l| nulls[(l % p) * q + l / p],
    );
    ratio_to_rejections(sum, n, r)
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
    fn zero_factors_give_zero_zeta() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let nl = build_noodle_loadings(&ce, Some(0)).unwrap();
        let x = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        let fit = fit_noodle(&x, &nl, FactorEstimator::LeastSquares).unwrap();
        assert!(fit.w_hat.is_empty());
        assert!(fit.zeta_hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exact_recovery_in_span() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let nl = build_noodle_loadings(&ce, Some(1)).unwrap();
        let theta = nl.factors[0].value;
        let v: Vec<f64> = (0..6).map(|l| theta.sqrt() * nl.rho(0, l)).collect();
        let x = DenseMatrix::from_vec_col_major(3, 2, &v);
        let fit = fit_noodle(&x, &nl, FactorEstimator::LeastSquares).unwrap();
        // F̂ already carries √θ̂₁, so the realized factor is 1
        assert!((fit.w_hat[0] - 1.0).abs() < 1e-12);
        for (a, b) in fit.zeta_hat.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rejections_give_zero() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let nl = build_noodle_loadings(&ce, Some(2)).unwrap();
        let x = DenseMatrix::from_fn(3, 2, |i, j| (i * j) as f64);
        let fit = fit_noodle(&x, &nl, FactorEstimator::LeastSquares).unwrap();
        assert_eq!(fdp_noodle(&fit, 0, 0.01), 0.0);
    }

    #[test]
    fn independent_case_closed_form() {
        let ce = CorrEstimates::from_matrices(SpdMatrix::<f64>::identity(4), SpdMatrix::identity(5), 2).unwrap();
        let nl = build_noodle_loadings(&ce, Some(0)).unwrap();
        let x = DenseMatrix::from_fn(4, 5, |i, j| (i as f64) - (j as f64));
        let fit = fit_noodle(&x, &nl, FactorEstimator::LeastSquares).unwrap();
        let t = 0.01;
        let got = fdp_noodle(&fit, 3, t);
        assert!((got - 20.0 * t / 3.0).abs() < 1e-14);
    }

    #[test]
    fn oracle_with_empty_mask_is_zero() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let mask = TruthMask::new(3, 2, vec![false; 6]).unwrap();
        assert_eq!(fdp_oracle_noodle(&ce, 1, &[0.3], &mask, 4, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn oracle_independent_case_counts_nulls() {
        let ce = CorrEstimates::from_matrices(SpdMatrix::<f64>::identity(3), SpdMatrix::identity(2), 2).unwrap();
        let mask = TruthMask::new(3, 2, vec![true, false, true, true, false, true]).unwrap();
        let got: f64 = fdp_oracle_noodle(&ce, 0, &[], &mask, 2, 0.1).unwrap();
        assert!((got - 4.0 * 0.1 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn trimmed_fit_matches_least_squares_in_span() {
        let ce = CorrEstimates::from_matrices(corr3(), corr2(), 2).unwrap();
        let nl = build_noodle_loadings(&ce, Some(2)).unwrap();
        let w = [0.8, -0.5];
        let zeta = noodle_zeta(&nl, &w);
        let x = DenseMatrix::from_vec_col_major(3, 2, &zeta);
        let fit = fit_noodle(&x, &nl, FactorEstimator::TrimmedL1(TrimSpec::new(1.0).unwrap())).unwrap();
        for (a, b) in fit.w_hat.iter().zip(&w) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
