use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or invalid map specification text.
    #[error("map spec error (line {line}): {msg}")]
    Spec { line: usize, msg: String },

    /// Invalid run configuration (resolutions, budgets, windows, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A non-finite coordinate appeared during iteration.
    #[error("non-finite coordinate at step {step}")]
    Numerical { step: u64 },

    /// A mask with no true cells cannot produce a height profile.
    #[error("mask is empty; no height profile exists")]
    EmptyMask,

    /// A search had to be truncated and the truncation could hide an answer.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// An operation was invoked outside its stated hypotheses.
    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn spec(line: usize, msg: impl Into<String>) -> Self {
        Error::Spec {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
