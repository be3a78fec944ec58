use std::path::PathBuf;

/// Every fallible operation in the crate reports through this type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance matrix is not symmetric (max |γ_ij - γ_ji| = {0:e})")]
    NotSymmetric(f64),

    #[error("unphysical covariance matrix: {0}")]
    Unphysical(String),

    #[error("frequency grid: {0}")]
    Grid(String),

    #[error("gain profile does not settle to unity at the grid edges (|G-1| = {deviation:e} exceeds {tolerance:e})")]
    EdgeNotSettled { deviation: f64, tolerance: f64 },

    #[error("frequency {0} Hz lies outside the response grid")]
    OutOfGrid(f64),

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("band [{lo}, {hi}] Hz: {reason}")]
    Band { lo: f64, hi: f64, reason: String },

    #[error("curve never crosses level {0}")]
    NoCrossing(f64),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
