use thiserror::Error;

use crate::detect::DetectorResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("input of {len} samples is shorter than the channel span of {span} samples")]
    ChannelTooLong { span: usize, len: usize },

    #[error("correlation matrix is ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error(
        "iterative detection diverged (iterate norm {norm:.3e}); spectral radius of C - I is {spectral_radius:.6}"
    )]
    Divergence { norm: f64, spectral_radius: f64 },

    #[error("sphere search exceeded its node budget of {budget}")]
    NodeBudgetExceeded {
        budget: u64,
        best: Box<DetectorResult>,
    },

    #[error("search space of {size} candidates exceeds the exhaustive-search guard")]
    SearchSpaceTooLarge { size: f64 },

    #[error("training failed: {0}")]
    Training(String),

    #[error("no frame detected (correlation peak {peak:.3} below threshold {threshold:.3})")]
    NoFrame { peak: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InvalidConfig(_) => "invalid_config",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::EmptyInput(_) => "empty_input",
            Error::ChannelTooLong { .. } => "channel_too_long",
            Error::Singular { .. } => "singular",
            Error::Divergence { .. } => "divergence",
            Error::NodeBudgetExceeded { .. } => "node_budget_exceeded",
            Error::SearchSpaceTooLarge { .. } => "search_space_too_large",
            Error::Training(_) => "training",
            Error::NoFrame { .. } => "no_frame",
            Error::Parse(_) => "parse",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
