use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    /// Rank resolution failed; the spectrum that was inspected is attached.
    #[error("estimation error: {message}")]
    Estimation { message: String, spectrum: Vec<f64> },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
