//! Dense linear algebra: matrices, symmetric eigensystems, Kronecker
//! eigenstructure and matrix normal sampling.

pub mod eigen;
pub mod kron;
pub mod matrix;
pub mod sampling;
pub mod solve;

pub use eigen::{corr_from_cov, sym_eigen, sym_sqrt, EigenSystem, SpdMatrix};
pub use kron::{kron_eigenpairs, KronEigenIndex, KronEigenpair};
pub use matrix::{axpy, dot, DenseMatrix};
pub use sampling::{sample_matrix_normal, standard_normal_matrix, MatrixNormal};
