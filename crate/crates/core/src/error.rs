use thiserror::Error;

/// Errors surfaced by the signal-path and training primitives.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter combination violates a structural requirement
    /// (e.g. odd FFT size, CP longer than the symbol).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input is outside the domain of the operation
    /// (e.g. a timing offset whose target region leaves the window).
    #[error("domain error: {0}")]
    Domain(String),

    /// Back-off calibration could not bracket or reach the target EVM.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Closed-form training failed (non-finite features or singular system).
    #[error("training error: {0}")]
    Training(String),

    /// An operation was called on a model in the wrong state
    /// (e.g. inference before training).
    #[error("state error: {0}")]
    State(String),

    /// A model file is malformed, truncated, or of an unsupported version.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
