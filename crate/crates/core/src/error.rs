use thiserror::Error;

/// Errors raised by the library and the experiment CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("split point {split} lies outside the open interval (0, 1)")]
    SplitOutOfRange { split: f64 },

    #[error("split point {split} coincides with a covariate")]
    SplitOnCovariate { split: f64 },

    #[error("duplicate covariate {x}")]
    DuplicateCovariate { x: f64 },

    #[error("covariate {x} lies outside [0, 1]")]
    CovariateOutOfRange { x: f64 },

    #[error("exact oracle limited to n <= {max}, got n = {n}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("invalid step function: {0}")]
    InvalidFunction(String),

    #[error("all model weights are zero")]
    ZeroWeights,

    #[error("cached log Z_u drifted: cached {cached}, recomputed {recomputed}")]
    CacheMismatch { cached: f64, recomputed: f64 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::SplitOutOfRange { .. } => "split_out_of_range",
            Error::SplitOnCovariate { .. } => "split_on_covariate",
            Error::DuplicateCovariate { .. } => "duplicate_covariate",
            Error::CovariateOutOfRange { .. } => "covariate_out_of_range",
            Error::OracleTooLarge { .. } => "oracle_too_large",
            Error::InvalidFunction(_) => "invalid_function",
            Error::ZeroWeights => "zero_weights",
            Error::CacheMismatch { .. } => "cache_mismatch",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
