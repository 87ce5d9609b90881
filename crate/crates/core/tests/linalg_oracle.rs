mod common;

use common::*;
use matfdp_core::linalg::{
    kron_eigenpairs, sample_matrix_normal, sym_eigen, sym_sqrt, DenseMatrix, MatrixNormal, SpdMatrix,
};
use matfdp_core::rng::stream_rng;
use matfdp_core::Matrix;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn sym_eigen_matches_nalgebra() {
    let mut r = rng(1);
    for n in [1, 2, 3, 5, 8, 17, 40] {
        let a = random_corr(n, &mut r);
        let e = sym_eigen(&a).unwrap();
        let (vals, _) = dense_eigen(a.matrix());
        for (x, y) in e.values.iter().zip(&vals) {
            assert!((x - y).abs() < 1e-12, "n={n}");
        }
        let rec = e.reconstruct();
        assert!(rec.max_abs_diff(a.matrix()) <= 1e-10 * a.matrix().frobenius_norm());
        let gram = e.vectors.transpose().matmul(&e.vectors).unwrap();
        assert!(gram.max_abs_diff(&Matrix::identity(n)) < 1e-10);
        for k in 0..n {
            let first = (0..n).map(|i| e.vectors[(i, k)]).find(|v| v.abs() > 1e-12).unwrap();
            assert!(first > 0.0);
        }
    }
}

#[test]
fn two_by_two_hand_example() {
    let a = SpdMatrix::<f64>::new(DenseMatrix::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]])).unwrap();
    let e = sym_eigen(&a).unwrap();
    assert!((e.values[0] - 1.5).abs() < 1e-14 && (e.values[1] - 0.5).abs() < 1e-14);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((e.vectors[(0, 0)] - s).abs() < 1e-14 && (e.vectors[(1, 0)] - s).abs() < 1e-14);
    assert!((e.vectors[(0, 1)] - s).abs() < 1e-14 && (e.vectors[(1, 1)] + s).abs() < 1e-14);
}

#[test]
fn kron_values_match_explicit_product() {
    let mut r = rng(2);
    for _ in 0..20 {
        let p = r.random_range(1..=6);
        let q = r.random_range(1..=6);
        let (a, b) = (random_corr(p, &mut r), random_corr(q, &mut r));
        let idx = kron_eigenpairs(&sym_eigen(&a).unwrap(), &sym_eigen(&b).unwrap());
        let (vals, _) = dense_eigen(&b.matrix().kron(a.matrix()));
        for (x, y) in idx.values().iter().zip(&vals) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn kron_eigenvector_identity() {
    let mut r = rng(3);
    let (a, b) = (random_corr(4, &mut r), random_corr(3, &mut r));
    let (e1, e2) = (sym_eigen(&a).unwrap(), sym_eigen(&b).unwrap());
    let idx = kron_eigenpairs(&e1, &e2);
    let big = b.matrix().kron(a.matrix());
    for k in 0..idx.len() {
        let v = idx.eigenvector(k, &e1, &e2);
        let bv = big.matvec(&v).unwrap();
        for (x, y) in bv.iter().zip(&v) {
            assert!((x - idx.pairs()[k].value * y).abs() < 1e-8);
        }
    }
}

#[test]
fn sampler_identity_mean() {
    let mut r = stream_rng(11, 0);
    let z = Matrix::zeros(2, 2);
    let i2 = SpdMatrix::identity(2);
    let mn = MatrixNormal::new(z, &i2, &i2).unwrap();
    let draws = 100_000;
    let mut sum = [0.0; 4];
    let mut sq = [0.0; 4];
    for _ in 0..draws {
        let x = mn.sample(&mut r);
        for (k, v) in x.data().iter().enumerate() {
            sum[k] += v;
            sq[k] += v * v;
        }
    }
    for k in 0..4 {
        assert!((sum[k] / draws as f64).abs() < 0.02);
        assert!((sq[k] / draws as f64 - 1.0).abs() < 0.03);
    }
}

#[test]
fn sampler_vec_covariance_is_kronecker() {
    let mut r = rng(4);
    let u = random_corr(3, &mut r);
    let v = random_corr(3, &mut r);
    let mut g = stream_rng(5, 0);
    let mn = MatrixNormal::new(Matrix::zeros(3, 3), &u, &v).unwrap();
    let draws = 10_000;
    let mut cov = Matrix::zeros(9, 9);
    for _ in 0..draws {
        let x = mn.sample(&mut g).vec();
        for a in 0..9 {
            for b in 0..9 {
                cov[(a, b)] += x[a] * x[b] / draws as f64;
            }
        }
    }
    let truth = v.matrix().kron(u.matrix());
    let err = cov.sub(&truth).unwrap().frobenius_norm() / truth.frobenius_norm();
    assert!(err < 0.1, "relative error {err}");
}

#[test]
fn sampler_is_deterministic() {
    let mut r = rng(6);
    let u = random_corr(3, &mut r);
    let mu = Matrix::from_fn(3, 2, |i, j| (i + j) as f64);
    let v = SpdMatrix::identity(2);
    let a = sample_matrix_normal(&mu, &u, &v, &mut stream_rng(9, 3)).unwrap();
    let b = sample_matrix_normal(&mu, &u, &v, &mut stream_rng(9, 3)).unwrap();
    assert_eq!(a.data(), b.data());
}

#[test]
fn sqrt_is_a_square_root() {
    let mut r = rng(7);
    let a = random_corr(6, &mut r);
    let s = sym_sqrt(&a).unwrap();
    assert!(s.matmul(&s).unwrap().max_abs_diff(a.matrix()) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vec_kron_identity(seed in any::<u64>(), p in 1usize..5, q in 1usize..5) {
        // (Bᵀ ⊗ A) vec(X) = vec(A X B)
        let mut r = rng(seed);
        let a = normal_matrix(p, p, &mut r);
        let b = normal_matrix(q, q, &mut r);
        let x = normal_matrix(p, q, &mut r);
        let lhs = b.transpose().kron(&a).matvec(&x.vec()).unwrap();
        let rhs = a.matmul(&x).unwrap().matmul(&b).unwrap().vec();
        for (u, v) in lhs.iter().zip(&rhs) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn kron_values_sorted_and_complete(seed in any::<u64>(), p in 1usize..6, q in 1usize..6) {
        let mut r = rng(seed);
        let e1 = sym_eigen(&random_corr(p, &mut r)).unwrap();
        let e2 = sym_eigen(&random_corr(q, &mut r)).unwrap();
        let idx = kron_eigenpairs(&e1, &e2);
        prop_assert_eq!(idx.len(), p * q);
        let vals = idx.values();
        prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let mut seen = vec![false; p * q];
        for e in idx.pairs() {
            prop_assert!(!seen[e.i * q + e.j]);
            seen[e.i * q + e.j] = true;
        }
    }
}
