mod common;

use common::*;
use matfdp_core::covfactor::{build_sandwich_loadings, estimate_correlations};
use matfdp_core::linalg::DenseMatrix;
use matfdp_core::noodle::FactorEstimator;
use matfdp_core::sandwich::{fdp_sandwich, fit_sandwich};
use matfdp_core::teststats::{p_values, rejection_count, test_matrix, true_fdp, TestMatrix, TruthMask, TwoSampleDataset};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn counts_are_ordered_and_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = (r.random_range(1..6), r.random_range(1..6));
        let ds = random_dataset(p, q, r.random_range(2..5), r.random_range(3..5), &mut r);
        let pv = p_values(&test_matrix(&ds).unwrap());
        let mask = TruthMask::new(p, q, (0..p * q).map(|_| r.random_bool(0.6)).collect()).unwrap();
        let mut last_r = 0;
        for t in [1e-4, 1e-3, 0.01, 0.05, 0.2, 0.6, 0.99] {
            let f = true_fdp(&pv, &mask, t).unwrap();
            prop_assert!(f.v <= f.r && f.r <= p * q);
            prop_assert!(f.r >= last_r);
            prop_assert_eq!(f.r, rejection_count(&pv, t));
            prop_assert!((0.0..=1.0).contains(&f.fdp));
            last_r = f.r;
        }
    }

    #[test]
    fn p_values_symmetric_in_sign(x in -40.0f64..40.0) {
        let a = TestMatrix { x: DenseMatrix::from_rows(&[&[x]]), sigma_hat: DenseMatrix::from_rows(&[&[1.0]]), scale: 1.0 };
        let b = TestMatrix { x: DenseMatrix::from_rows(&[&[-x]]), sigma_hat: DenseMatrix::from_rows(&[&[1.0]]), scale: 1.0 };
        prop_assert_eq!(p_values(&a)[(0, 0)], p_values(&b)[(0, 0)]);
    }

    #[test]
    fn common_shift_leaves_statistics_unchanged(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ds = random_dataset(3, 4, 3, 4, &mut r);
        let c = normal_matrix(3, 4, &mut r).scale(5.0);
        let shift = |v: &[DenseMatrix<f64>]| v.iter().map(|m| m.add(&c).unwrap()).collect();
        let moved = TwoSampleDataset::new(shift(ds.treatment()), shift(ds.control())).unwrap();
        let (a, b) = (test_matrix(&ds).unwrap(), test_matrix(&moved).unwrap());
        prop_assert!(a.x.max_abs_diff(&b.x) < 1e-10);
        for t in [0.01, 0.1, 0.5] {
            prop_assert_eq!(rejection_count(&p_values(&a), t), rejection_count(&p_values(&b), t));
        }
    }
}

#[test]
fn single_precision_pipeline_runs() {
    let mut r = rng(40);
    let ds64 = random_dataset(4, 5, 5, 5, &mut r);
    let cast = |v: &[DenseMatrix<f64>]| -> Vec<DenseMatrix<f32>> {
        v.iter().map(|m| DenseMatrix::from_fn(4, 5, |i, j| m[(i, j)] as f32)).collect()
    };
    let ds = TwoSampleDataset::new(cast(ds64.treatment()), cast(ds64.control())).unwrap();
    let tm = test_matrix(&ds).unwrap();
    let ce = estimate_correlations(&ds, &tm.sigma_hat).unwrap();
    let sl = build_sandwich_loadings(&ce, Some(1), Some(1)).unwrap();
    let fit = fit_sandwich(&tm.x, &sl, FactorEstimator::LeastSquares).unwrap();
    let rr = rejection_count(&p_values(&tm), 0.1f32);
    let f32_val = fdp_sandwich(&fit, rr.max(1), 0.1f32);

    let tm64 = test_matrix(&ds64).unwrap();
    let ce64 = estimate_correlations(&ds64, &tm64.sigma_hat).unwrap();
    let sl64 = build_sandwich_loadings(&ce64, Some(1), Some(1)).unwrap();
    let fit64 = fit_sandwich(&tm64.x, &sl64, FactorEstimator::LeastSquares).unwrap();
    let f64_val = fdp_sandwich(&fit64, rr.max(1), 0.1);
    assert!((f32_val as f64 - f64_val).abs() < 1e-4);
}
