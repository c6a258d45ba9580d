use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field is outside its allowed range.
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("empty batch")]
    EmptyBatch,

    #[error("empty reference set")]
    EmptyReference,

    #[error("insufficient data for drift scoring")]
    InsufficientDriftData,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("degenerate distribution (total mass {0})")]
    DegenerateDistribution(f64),

    #[error("updating unplayable arm {arm}")]
    UnplayableArm { arm: usize },

    #[error("arm index {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("empty history")]
    EmptyHistory,

    #[error("budget {budget} exceeds batch size {batch}")]
    BudgetExceedsBatch { budget: usize, batch: usize },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("degenerate series")]
    DegenerateSeries,

    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("stream gap: expected week {expected}, found week {found}")]
    StreamGap { expected: u32, found: u32 },

    #[error("stream too short: {weeks} weeks with {warmup} warmup weeks")]
    StreamTooShort { weeks: usize, warmup: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid method `{0}` (valid: adapt, apt, ada, fixed:<k>, explore, exploit)")]
    InvalidMethod(String),

    #[error("feedback for a {0} decision requires a bandit")]
    NotBanditBacked(&'static str),

    #[error("invalid declaration {id}: {reason}")]
    InvalidDeclaration { id: u64, reason: String },

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("no data")]
    NoData,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by input data rather than configuration or runtime state.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Csv { .. }
                | Error::NoData
                | Error::StreamGap { .. }
                | Error::StreamTooShort { .. }
                | Error::InvalidDeclaration { .. }
                | Error::EmptyBatch
        )
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidMethod(_)
                | Error::InvalidSchedule(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
