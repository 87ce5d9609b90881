use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e}, largest {largest:e})")]
    NotPsd { eigenvalue: f64, largest: f64 },

    #[error("degenerate variance at cell ({row}, {col})")]
    DegenerateVariance { row: usize, col: usize },

    #[error("non-positive eigenvalue {value:e} at position {index}")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("invalid factor count {requested} (at most {max})")]
    InvalidFactorCount { requested: usize, max: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
