use thiserror::Error;

/// Errors surfaced by the model. Variants map onto CLI exit codes in `main.rs`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("numerical convergence failure in {context}: {detail}")]
    Convergence { context: String, detail: String },

    #[error("validity violation: {quantity} = {ratio:.3e} exceeds {limit:.3e}")]
    Validity { quantity: String, ratio: f64, limit: f64 },

    #[error("fit did not converge after {iterations} iterations (best cost {best_cost:.3e})")]
    FitFailure {
        iterations: usize,
        best_cost: f64,
        best: [f64; 3],
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidInput {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Reject NaN/inf and (optionally) non-positive values.
pub(crate) fn require_finite(field: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {x}")))
    }
}

pub(crate) fn require_positive(field: &str, x: f64) -> Result<()> {
    require_finite(field, x)?;
    if x > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {x}")))
    }
}
