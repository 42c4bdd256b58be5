//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A mathematical precondition failed (named in the message).
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity required to be nonzero or invertible vanished.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Operation applied to the wrong rotator kind.
    #[error("classification error: {0}")]
    Classification(String),

    /// Gauge feasibility denominator underflow (unreachable for valid G).
    #[error("gauge feasibility violation: {0}")]
    Feasibility(String),

    /// Requested gauge frequency would exceed the speed of light.
    #[error("superluminal gauge: {0}")]
    SuperluminalGauge(String),

    /// Mass-spin curve inversion failed.
    #[error("inversion error: {0}")]
    Inversion(String),

    /// Non-finite number encountered where a finite one is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Integration aborted (constraint residual blew past the threshold).
    #[error("integration aborted at t = {t}: {reason}")]
    IntegrationAbort { t: f64, reason: String },

    /// File or serialization failures in the export layer.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON serialization failures in the export layer.
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenient result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
