use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach tolerance (residual {residual:.3e}, tolerance {tolerance:.3e})")]
    Tolerance { residual: f64, tolerance: f64 },

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("resolution error: block {block} exceeds the grid limit {limit}")]
    Resolution { block: i32, limit: i32 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("refinement needed: sub-cutoff remainder {remainder:.3e} exceeds {allowed:.3e}")]
    Refinement { remainder: f64, allowed: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("instability at step {step} (t = {time:.6})")]
    Instability { step: usize, time: f64 },

    #[error("fixed-point iteration did not contract: {0}")]
    NonContraction(String),

    #[error("thinning bound {bound} exceeded by kernel value {value} at t = {time:.6}")]
    ThinningViolation { bound: f64, value: f64, time: f64 },

    #[error("smallness certificate unattainable: {0}")]
    SmallnessUnattainable(String),

    #[error("certificate violation: {0}")]
    CertificateViolation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid-model",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Tolerance { .. } => "tolerance",
            Error::Degenerate(_) => "degenerate",
            Error::Sampling(_) => "sampling",
            Error::Resolution { .. } => "resolution",
            Error::GridMismatch(_) => "grid-mismatch",
            Error::UndefinedRatio(_) => "undefined-ratio",
            Error::Refinement { .. } => "refinement",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::Instability { .. } => "instability",
            Error::NonContraction(_) => "non-contraction",
            Error::ThinningViolation { .. } => "thinning-violation",
            Error::SmallnessUnattainable(_) => "smallness-unattainable",
            Error::CertificateViolation(_) => "certificate-violation",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}
