use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum PannError {
    /// Inconsistent shapes, stale design bundles or invalid settings.
    #[error("configuration error: {0}")]
    Config(String),
    /// A loss or gradient evaluated to NaN or infinity.
    #[error("non-finite loss encountered during training")]
    NonFinite,
    /// Requested feature is not available for this combination of options.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Linear system could not be solved reliably.
    #[error("ill-conditioned system: {0}")]
    Singular(String),
    /// Violated internal invariant.
    #[error("internal error: {0}")]
    Internal(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, PannError>;

macro_rules! config_err {
    ($($arg:tt)*) => {
        $crate::error::PannError::Config(format!($($arg)*))
    };
}
pub(crate) use config_err;
