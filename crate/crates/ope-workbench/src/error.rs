//! Error types shared across the workbench.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("operands live over different variable lists")]
    VariableMismatch,
    #[error("ring descriptors do not match")]
    DescriptorMismatch,
    #[error("not invertible in this chart: {0}")]
    NotInvertible(String),
    #[error("no canonical map into the requested chart: {0}")]
    NoCanonicalMap(String),
    #[error("variable collision between tensor factors")]
    VariableCollision,
    #[error("negative n-th products exist only in vertex algebras")]
    NegativeProduct,
    #[error("invalid Lie structure constants: {0}")]
    InvalidStructureConstants(String),
    #[error("presentation admits no positive grading; enveloping construction unavailable")]
    NotGraded,
    #[error("pull-back through the mode normal form failed: {0}")]
    PullbackFailure(String),
    #[error("module is not (x-y)-regular on a graded piece")]
    NotRegular,
    #[error("transition map not invertible on a graded piece")]
    TransitionNotInvertible,
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Other(String),
}
