use thiserror::Error;

/// Errors raised by operator construction, step-size evaluation, the solver
/// and problem I/O.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("normal vector must be nonzero")]
    ZeroNormal,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A step size was requested at a (numerically) fixed point of the operator.
    #[error("point is a fixed point of the cyclic operator; step size is undefined")]
    FixedPoint,

    /// A specialized step size was requested for an operator list that
    /// contains stages of another kind.
    #[error("stage {stage} is a {found} operator, expected {expected}")]
    StageKind {
        stage: usize,
        expected: &'static str,
        found: &'static str,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid problem: {0}")]
    Validation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
