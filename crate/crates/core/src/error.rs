use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("score is undefined for a deterministic policy (W = 0)")]
    DeterministicPolicy,

    #[error("time {t} lies beyond the horizon T = {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("closed forms require B*K > 0, got {0}")]
    NonPositiveMixingRate(f64),

    #[error("trajectory has {got} steps, expected {expected}")]
    TrajectoryLength { expected: usize, got: usize },

    #[error("matrix `{0}` is not symmetric")]
    NotSymmetric(&'static str),

    #[error("shape mismatch for `{name}`: expected {expected}, got {got}")]
    Shape {
        name: &'static str,
        expected: String,
        got: String,
    },

    #[error("log-log fit needs strictly positive values, got ({n}, {value})")]
    NonPositive { n: f64, value: f64 },

    #[error("log-log fit needs at least two distinct points")]
    TooFewPoints,

    #[error("unknown method `{0}` (expected one of nb, vb, sb, ab, ve)")]
    UnknownMethod(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("io error on `{path}`: {reason}")]
    Io { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
