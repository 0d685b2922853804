use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid urn composition: {0}")]
    InvalidComposition(String),

    #[error("weight undefined before second decision (got index {0})")]
    WeightUndefined(u64),

    #[error("empty horizon")]
    EmptyHorizon,

    #[error("enumeration infeasible for horizon {horizon} (limit {limit})")]
    EnumerationInfeasible { horizon: usize, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty sample")]
    EmptySample,

    #[error("sample too small for asymptotic KS threshold ({got} < {min})")]
    SampleTooSmall { got: usize, min: usize },

    #[error("unsupported significance level {0} (expected 0.05 or 0.01)")]
    UnsupportedSignificance(f64),

    #[error("invalid config at `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("time {time} out of range 1..={horizon}")]
    TimeOutOfRange { time: usize, horizon: usize },

    #[error("full paths required")]
    FullPathsRequired,

    #[error("lookahead exceeds horizon ({time} + {lookahead} > {horizon})")]
    LookaheadExceedsHorizon {
        time: usize,
        lookahead: usize,
        horizon: usize,
    },

    #[error("AUC undefined: outcomes contain a single class")]
    AucUndefined,

    #[error("length mismatch: {0} scores vs {1} outcomes")]
    LengthMismatch(usize, usize),

    #[error("power estimate unreliable: {0} repetitions (need at least 20)")]
    TooFewRepetitions(usize),

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
