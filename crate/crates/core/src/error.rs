use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// An experiment or algorithm configuration is inconsistent.
    #[error("invalid configuration for `{field}`: {message}")]
    Config { field: String, message: String },

    /// The requested sampling weight has no normalizable density on this phase space.
    #[error("unsupported sampling weight: {0}")]
    UnsupportedWeight(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Usage(_) | Error::Config { .. } | Error::UnsupportedWeight(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
