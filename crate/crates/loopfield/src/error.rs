use thiserror::Error;

/// Error type shared by all modules.
///
/// Variants mirror the failure classes of the public operations: invalid
/// configuration or arguments, out-of-domain evaluation points, missing
/// calibration data, undersized ensembles, and distributions lacking the
/// structure an operation needs (for example a density for couplings).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("calibration required: {0}")]
    Calibration(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
