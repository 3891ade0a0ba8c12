use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |A - A^dag| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("dimension {dim} exceeds the dense diagonalization cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("site {site} out of range for L = {l}")]
    SiteOutOfRange { site: usize, l: usize },

    #[error("time {t} outside protocol range [0, {tau}]")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("integration failed: {reason} (max norm drift {max_drift:e})")]
    Integration { reason: String, max_drift: f64 },

    #[error("operator is not unitary (max |U^dag U - I| = {defect:e})")]
    NonUnitary { defect: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("quadrature did not converge (last estimate change {change:e})")]
    Quadrature { change: f64 },

    #[error("{check}: residual {residual:e} exceeds tolerance {tol:e}")]
    Tolerance { check: String, residual: f64, tol: f64 },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
