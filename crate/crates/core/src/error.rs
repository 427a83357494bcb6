use thiserror::Error;

/// Errors raised by the numerical kernels, the synthesis routines and the
/// cost analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix `{what}` contains a non-finite entry")]
    NonFinite { what: &'static str },

    #[error("matrix `{what}` is not symmetric (defect {defect:e})")]
    NonSymmetric { what: &'static str, defect: f64 },

    #[error("matrix `{what}` is not positive semi-definite (min eigenvalue {min_eig:e})")]
    NotPsd { what: &'static str, min_eig: f64 },

    #[error("matrix `{what}` is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hurwitz (max real part of eigenvalues {max_real:e})")]
    NotHurwitz { max_real: f64 },

    #[error("(A, B) is not stabilizable")]
    NotStabilizable,

    #[error("ill-conditioned invariant subspace: {0}")]
    IllConditioned(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected (lambda_2 = {lambda2:e})")]
    NotConnected { lambda2: f64 },

    #[error("invalid spectral data: need 0 < lower <= upper, got ({lower}, {upper})")]
    InvalidSpectralData { lower: f64, upper: f64 },

    #[error("coupling c = {c} outside the admissible interval {interval}")]
    COutOfRange { c: f64, interval: String },

    #[error("Riccati inequality not strict at P (max eigenvalue {max_eig:e}, required <= {required:e}); increase epsilon")]
    InequalityNotStrict { max_eig: f64, required: f64 },

    #[error("budget infeasible: x0' P x0 = {value} >= gamma = {gamma}")]
    BudgetInfeasible { value: f64, gamma: f64 },

    #[error("cost is infinite: mode {mode} (lambda = {lambda}) is not Hurwitz")]
    CostInfinite { mode: usize, lambda: f64 },

    #[error("step too large: {0}")]
    StepTooLarge(String),

    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
