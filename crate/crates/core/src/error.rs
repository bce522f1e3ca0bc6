use thiserror::Error;

/// Errors raised by state, operator, measurement and scenario operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("cannot normalize a zero vector (norm {norm:e})")]
    ZeroVector { norm: f64 },

    #[error("operands live on different spaces ({left} vs {right})")]
    SpaceMismatch { left: String, right: String },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("space has no recorded tensor-factor structure")]
    NotAProductSpace,

    #[error("subsystem index {index} out of range for {count} factors")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("expected dimension {expected}, got {actual}")]
    WrongDimension { expected: usize, actual: usize },

    #[error("matrix is not unitary (max |U\u{2020}U - I| entry {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian (max asymmetry {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace must be 1, got {trace}")]
    InvalidTrace { trace: f64 },

    #[error("matrix is not positive semidefinite (pivot estimate {estimate:e})")]
    NotPositiveSemidefinite { estimate: f64 },

    #[error("null outcome impossible: uncovered weight {weight:e} is below threshold")]
    NullImpossible { weight: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown label {label:?}")]
    UnknownLabel { label: String },

    #[error("duplicate label {label:?}")]
    DuplicateLabel { label: String },

    #[error("amplitude at index {index} is not finite")]
    NonFiniteAmplitude { index: usize },

    #[error("expected {expected} amplitudes, got {actual}")]
    AmplitudeCountMismatch { expected: usize, actual: usize },

    #[error("label subspaces must partition the basis: {0}")]
    BadPartition(String),

    #[error("detector coverage is empty")]
    EmptyCoverage,

    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
