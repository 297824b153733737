//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation, linear algebra, and optimization routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Qubit count outside the supported range.
    #[error("qubit count {n} outside supported range [1, {max}]")]
    SizeOutOfRange { n: usize, max: usize },

    /// Operands have incompatible dimensions.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Input fails a structural precondition (hermiticity, trace, range, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    /// Transfer matrix is singular; the channel is not injective.
    #[error("channel is not invertible (smallest singular value {smallest_singular_value:.3e})")]
    NonInvertible { smallest_singular_value: f64 },

    /// The channel's output is not full rank for some state, so the β
    /// margin vanishes.
    #[error("rank-deficient channel output: beta margin {beta:.3e} below tolerance")]
    RankDeficientOutput { beta: f64 },

    /// Fisher information diverges (rank-deficient output state with a
    /// derivative component in its kernel).
    #[error("quantum Fisher information diverges at the requested point")]
    DivergentInformation,

    /// Fisher matrix is singular along the reported direction.
    #[error("Fisher matrix singular along a null direction (min eigenvalue {min_eigenvalue:.3e})")]
    SingularInformation { min_eigenvalue: f64 },

    /// Quasiprobability dictionary cannot represent the target map.
    #[error("quasiprobability decomposition infeasible: {0}")]
    Infeasible(String),

    /// Iterative optimization failed to converge within its budget.
    #[error("optimization did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
