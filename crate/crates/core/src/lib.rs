//! False discovery proportion estimation for two-sample multiple testing on
//! matrix-valued data with row and column dependence.
//!
//! The pipeline is: build the standardized statistic matrix
//! ([`teststats::test_matrix`]), estimate the row and column correlation
//! matrices ([`covfactor::estimate_correlations`]), pick factor loadings,
//! estimate the realized factors, and plug them into the FDP approximation
//! ([`noodle`], [`sandwich`], or the vectorized [`pfa`] baseline).
//!
//! Every routine is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.
//!
//! ```
//! use matfdp_core::{Dataset, Matrix};
//! use matfdp_core::teststats::{p_values, rejection_count, test_matrix};
//! use matfdp_core::covfactor::{build_sandwich_loadings, estimate_correlations};
//! use matfdp_core::noodle::FactorEstimator;
//! use matfdp_core::sandwich::{fdp_sandwich, fit_sandwich};
//!
//! let obs = |s: f64| Matrix::from_fn(3, 4, |i, j| ((s + i as f64) * 1.7 + j as f64).sin());
//! let ds = Dataset::new(
//!     (0..4).map(|s| obs(s as f64)).collect(),
//!     (4..8).map(|s| obs(s as f64)).collect(),
//! )
//! .unwrap();
//! let tm = test_matrix(&ds).unwrap();
//! let pv = p_values(&tm);
//! let r = rejection_count(&pv, 0.2);
//! let ce = estimate_correlations(&ds, &tm.sigma_hat).unwrap();
//! let sl = build_sandwich_loadings(&ce, Some(1), Some(1)).unwrap();
//! let fit = fit_sandwich(&tm.x, &sl, FactorEstimator::LeastSquares).unwrap();
//! let fdp = fdp_sandwich(&fit, r, 0.2);
//! assert!(fdp >= 0.0);
//! ```

pub mod covfactor;
pub mod error;
pub mod fdp;
pub mod linalg;
pub mod noodle;
pub mod normal;
pub mod pfa;
pub mod rng;
pub mod sandwich;
pub mod scalar;
pub mod teststats;
pub mod trimreg;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type SymMatrix = linalg::SpdMatrix<f64>;
pub type Eigen = linalg::EigenSystem<f64>;
pub type Dataset = teststats::TwoSampleDataset<f64>;
pub type Statistics = teststats::TestMatrix<f64>;
pub type Correlations = covfactor::CorrEstimates<f64>;
