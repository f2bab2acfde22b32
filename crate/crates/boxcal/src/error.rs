use thiserror::Error;

/// Errors produced across the crate.
///
/// The CLI maps these onto exit codes: usage, domain, schema, I/O and
/// training failures exit 1; `Fit` (an unusable calibration set) exits 2
/// so scripts can branch on the warning path.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller violated a precondition (empty input, bad index, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A calibration set was unusable for fitting a recalibrator.
    #[error("fit error: {0}")]
    Fit(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    /// A record on disk failed schema validation.
    #[error("schema error at {path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
