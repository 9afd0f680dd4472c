use thiserror::Error;

/// Errors raised by the spectral toolkit.
///
/// Variants are grouped by how a caller is expected to react: parameter and
/// validation errors are usage problems, the numerical variants signal that a
/// computation could not reach its requested accuracy.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("grid does not resolve the potential: {0}")]
    Resolution(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("eigensolver did not converge: {0}")]
    Solver(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bracketing failed: {0}")]
    Bracketing(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("accuracy target not met: {0}")]
    Accuracy(String),

    #[error("eigenvalue ladder not converged: {0}")]
    Unconverged(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by the numerics rather than by the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Solver(_)
                | Error::Domain(_)
                | Error::Bracketing(_)
                | Error::Search(_)
                | Error::Accuracy(_)
                | Error::Unconverged(_)
                | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
