//! Crate-wide error type.

use crate::linalg::C64;

/// Errors returned by construction, evaluation and solve routines.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation requested outside the open unit disk.
    #[error("point with |z| = {modulus} lies outside the open unit disk")]
    OutsideDisk { modulus: f64 },

    /// The state matrix fails the strict stability check.
    #[error("unstable pair: spectral radius bound {rho_bound} is not < 1 - 1e-8")]
    UnstablePair { rho_bound: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix while {context}")]
    Singular { context: String },

    /// A function could not be evaluated at a specific point.
    #[error("evaluation failed at z = {z}: {reason}")]
    EvalFailed { z: C64, reason: String },

    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    /// A solver precondition (definiteness, admissible weight) is violated.
    #[error("solver precondition failed: {0}")]
    SolverPrecondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
