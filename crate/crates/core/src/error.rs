use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value that violates a structural invariant. `path` names the
    /// offending field (for example `users[0].pi`).
    #[error("invalid {path}: {message}")]
    Validation { path: String, message: String },

    /// One of the two regularity conditions does not hold.
    #[error("regularity violated: {0}")]
    Regularity(String),

    #[error("exact enumeration needs {required:.3e} joint states (cap {cap}); use monte_carlo with at least {hint_samples} samples or convolve")]
    EnumerationCap {
        required: f64,
        cap: usize,
        hint_samples: u64,
    },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("search failed: {0}")]
    SearchFailure(String),

    #[error("inconclusive Monte Carlo certificate: {0}")]
    Inconclusive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}
