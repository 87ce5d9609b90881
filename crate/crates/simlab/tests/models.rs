use matfdp_core::linalg::{DenseMatrix, SpdMatrix};
use matfdp_core::rng::stream_rng;
use matfdp_simlab::{
    gen_correlations, power_decay, preset_names, Design, LoadingDist, Model, ModelSpec, Signal, WDist,
};
use nalgebra::DMatrix;

fn to_na(m: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

#[test]
fn every_preset_builds() {
    for model in 1..=3u8 {
        for name in preset_names(model) {
            let spec = ModelSpec::preset(model, name, 20, 30, 10, 10).unwrap();
            assert_eq!(spec.model.number(), model);
        }
    }
    assert!(ModelSpec::preset(4, "a", 20, 30, 10, 10).is_err());
    assert!(ModelSpec::preset(1, "c", 20, 30, 10, 10).is_err());
    assert!(ModelSpec::preset(3, "f55-exp", 20, 30, 10, 10).is_err());
}

#[test]
fn preset_parameters() {
    let a = ModelSpec::preset(1, "a", 50, 50, 50, 50).unwrap();
    assert_eq!((a.l1, a.l2, a.loading_dist), (2, 4, LoadingDist::Uniform(-1.0, 1.0)));
    let b = ModelSpec::preset(2, "b", 50, 50, 50, 50).unwrap();
    assert_eq!(b.model, Model::PowerDecay { rho1: 0.5, rho2: 0.8 });
    let c = ModelSpec::preset(3, "f24-t6", 50, 50, 50, 50).unwrap();
    assert_eq!((c.l1, c.l2), (2, 4));
    assert_eq!(c.model, Model::NonNormal { w_dist: WDist::ScaledT6 });
}

#[test]
fn validation_rejects_bad_specs() {
    let mut s = ModelSpec::preset(1, "a", 20, 30, 10, 10).unwrap();
    s.signal = Signal { rows: 21, cols: 1, amplitude: 1.0 };
    assert!(s.validate().is_err());
    let mut s = ModelSpec::preset(2, "a", 20, 30, 10, 10).unwrap();
    s.model = Model::PowerDecay { rho1: 1.0, rho2: 0.1 };
    assert!(s.validate().is_err());
    assert!(ModelSpec::preset(1, "a", 20, 30, 2, 2).is_err());
}

#[test]
fn signal_block_false_nulls() {
    let spec = ModelSpec::preset(1, "a", 100, 100, 50, 50).unwrap();
    let mask = spec.truth_mask();
    assert_eq!(mask.as_slice().iter().filter(|&&null| !null).count(), 200);
    assert!(!mask.is_null(7, 24));
    assert!(mask.is_null(8, 0));
    assert!(mask.is_null(0, 25));
}

#[test]
fn zero_amplitude_is_global_null() {
    let mut spec = ModelSpec::preset(2, "a", 30, 40, 10, 10).unwrap();
    spec.signal.amplitude = 0.0;
    let design = Design::generate(spec, &mut stream_rng(1, 0)).unwrap();
    let (_, mask) = design.gen_round(&mut stream_rng(1, 1)).unwrap();
    assert_eq!(mask.null_count(), 30 * 40);
}

#[test]
fn power_decay_entries() {
    let m = power_decay(5, 0.5);
    assert_eq!(m[(0, 2)], 0.25);
    assert_eq!(m[(3, 1)], 0.25);
    assert_eq!(m[(4, 4)], 1.0);
}

#[test]
fn no_factors_no_decay_is_identity() {
    let mut spec = ModelSpec::preset(2, "a", 6, 4, 5, 5).unwrap();
    spec.model = Model::PowerDecay { rho1: 0.0, rho2: 0.0 };
    spec.l1 = 0;
    spec.l2 = 0;
    spec.signal = Signal { rows: 1, cols: 1, amplitude: 1.0 };
    let (s1, s2) = gen_correlations(&spec, &mut stream_rng(3, 0)).unwrap();
    assert_eq!(s1.matrix(), &DenseMatrix::identity(6));
    assert_eq!(s2.matrix(), &DenseMatrix::identity(4));
}

#[test]
fn correlations_are_valid() {
    for (model, setting) in [(1, "a"), (1, "b"), (2, "a"), (2, "b"), (3, "f44-exp")] {
        let spec = ModelSpec::preset(model, setting, 40, 30, 10, 10).unwrap();
        let (s1, s2) = gen_correlations(&spec, &mut stream_rng(11, 0)).unwrap();
        for s in [&s1, &s2] {
            let na = to_na(s.matrix());
            assert!(na.diagonal().iter().all(|&d| (d - 1.0).abs() < 1e-12));
            assert!((&na - na.transpose()).amax() < 1e-14);
            let min = na.symmetric_eigenvalues().min();
            assert!(min > -1e-10, "{model}{setting}: eigenvalue {min}");
        }
    }
}

#[test]
fn power_decay_before_factors() {
    // B drawn with a single zero-width factor leaves Σ_u untouched
    let mut spec = ModelSpec::preset(2, "a", 5, 5, 5, 5).unwrap();
    spec.l1 = 0;
    spec.l2 = 0;
    spec.signal.rows = 1;
    spec.signal.cols = 1;
    let (s1, s2) = gen_correlations(&spec, &mut stream_rng(0, 0)).unwrap();
    assert!((s1.matrix()[(0, 2)] - 0.25).abs() < 1e-15);
    assert!((s2.matrix()[(1, 3)] - 0.09).abs() < 1e-15);
}

#[test]
fn w_draws_have_unit_variance() {
    let mut rng = stream_rng(5, 9);
    for dist in [WDist::ScaledT6, WDist::CenteredExp] {
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02, "{dist}: mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "{dist}: var {var}");
    }
}

fn sample_vec_cov(obs: &[DenseMatrix<f64>]) -> DMatrix<f64> {
    let d = obs[0].rows() * obs[0].cols();
    let mut cov = DMatrix::zeros(d, d);
    let mut mean = DMatrix::zeros(d, 1);
    for o in obs {
        mean += DMatrix::from_vec(d, 1, o.vec());
    }
    mean /= obs.len() as f64;
    for o in obs {
        let v = DMatrix::from_vec(d, 1, o.vec()) - &mean;
        cov += &v * v.transpose();
    }
    cov / (obs.len() - 1) as f64
}

fn check_vec_cov(spec: ModelSpec, seed: u64) {
    let s1 = SpdMatrix::new(DenseMatrix::from_rows(&[
        &[1.0, 0.5, 0.2],
        &[0.5, 1.0, -0.3],
        &[0.2, -0.3, 1.0],
    ]))
    .unwrap();
    let s2 = SpdMatrix::new(DenseMatrix::from_rows(&[
        &[1.0, 0.7, 0.0],
        &[0.7, 1.0, 0.4],
        &[0.0, 0.4, 1.0],
    ]))
    .unwrap();
    let expected = to_na(s2.matrix()).kronecker(&to_na(s1.matrix()));
    let design = Design::new(spec, s1, s2).unwrap();
    let (ds, _) = design.gen_round(&mut stream_rng(seed, 1)).unwrap();
    let got = sample_vec_cov(ds.control());
    let rel = (&got - &expected).norm() / expected.norm();
    assert!(rel < 0.1, "relative error {rel}");
}

#[test]
fn model3_vec_covariance_is_kronecker() {
    for setting in ["f22-exp", "f22-t6"] {
        let mut spec = ModelSpec::preset(3, setting, 3, 3, 2, 10_000).unwrap();
        spec.signal = Signal { rows: 1, cols: 1, amplitude: 1.0 };
        check_vec_cov(spec, 21);
    }
}

#[test]
fn matrix_normal_vec_covariance_is_kronecker() {
    let mut spec = ModelSpec::preset(1, "b", 3, 3, 2, 10_000).unwrap();
    spec.signal = Signal { rows: 1, cols: 1, amplitude: 1.0 };
    check_vec_cov(spec, 22);
}

#[test]
fn treatment_mean_carries_signal() {
    let mut spec = ModelSpec::preset(3, "f33-exp", 4, 5, 4000, 3).unwrap();
    spec.signal = Signal { rows: 2, cols: 3, amplitude: 1.5 };
    let design = Design::generate(spec, &mut stream_rng(8, 0)).unwrap();
    let (ds, _) = design.gen_round(&mut stream_rng(8, 1)).unwrap();
    let mean = ds.treatment_mean();
    for i in 0..4 {
        for j in 0..5 {
            let want = if i < 2 && j < 3 { 1.5 } else { 0.0 };
            assert!((mean[(i, j)] - want).abs() < 0.08, "({i},{j}) {}", mean[(i, j)]);
        }
    }
}
