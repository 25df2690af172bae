use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration cannot describe a valid run (grid too small, pitch too coarse, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A value failed validation; `index` points at the offending element when there is one.
    #[error("validation error{}: {message}", .index.map(|i| format!(" at index {i}")).unwrap_or_default())]
    Validation {
        message: String,
        index: Option<usize>,
    },

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two arrays or grids that must agree do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A requested coordinate lies outside a grid.
    #[error("range error: {0}")]
    Range(String),

    /// Ensemble averages vanished, so normalization is impossible.
    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),
}

impl Error {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation {
            message: message.into(),
            index: None,
        }
    }

    pub(crate) fn validation_at(index: usize, message: impl Into<String>) -> Self {
        Error::Validation {
            message: message.into(),
            index: Some(index),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
