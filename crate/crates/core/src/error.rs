use thiserror::Error;

/// Errors raised by validation, estimation and resampling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value at index {0:?}")]
    NonFinite(Vec<usize>),

    #[error("dimension too small: {0}")]
    DimensionTooSmall(String),

    #[error("mask entry ({0}, {1}) listed more than once")]
    DuplicateMaskEntry(usize, usize),

    #[error("mask is empty or leaves a row/column without observations: {0}")]
    EmptyMask(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid moment: c2 must be positive and finite, got c2 = {c2}, c3 = {c3}")]
    InvalidMoment { c2: f64, c3: f64 },

    #[error("sample too small for moment correction: n = {0}, need n >= 3")]
    SampleTooSmall(u64),

    #[error("too few bootstrap replicates: {got}, need at least {need}")]
    TooFewReplicates { got: usize, need: usize },

    #[error("singular jacobian: {0}")]
    SingularJacobian(String),

    #[error("moment function failed: {0}")]
    MomentEvaluationFailure(String),

    #[error("unknown design '{0}'")]
    UnknownDesign(String),
}

pub type Result<T> = std::result::Result<T, Error>;
