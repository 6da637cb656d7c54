use thiserror::Error;

/// Errors raised by the numerical and estimation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpnError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge (residual {residual:e})")]
    Convergence { what: &'static str, residual: f64 },

    #[error("kind mismatch: {0}")]
    KindMismatch(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("unknown estimator `{name}`; valid names: {}", valid.join(", "))]
    UnknownEstimator { name: String, valid: Vec<String> },

    #[error("invalid task: {0}")]
    InvalidTask(String),
}

pub type Result<T> = std::result::Result<T, GpnError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GpnError::Domain(msg.into()))
}
