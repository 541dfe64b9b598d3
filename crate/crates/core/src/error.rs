use thiserror::Error;

/// Errors produced by operator algebra, model builders, and witness computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian: max |A - A^†| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix function is not finite at eigenvalue {eigenvalue}")]
    NonFiniteFunction { eigenvalue: f64 },

    #[error("zero energy gap between levels {lower} and {upper}")]
    ZeroGap { lower: usize, upper: usize },

    #[error(
        "coupling has off-block leakage {leakage:.3e} above tolerance {tolerance:.3e}; \
         block-diagonalize it (effective_coupling after solve_generator) before taking branch traces"
    )]
    LeakageTooLarge { leakage: f64, tolerance: f64 },

    /// Inconsistent or invalid model specification.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Parameter outside the physical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Hilbert-space dimension {dim} exceeds the configured cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("state vector is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
