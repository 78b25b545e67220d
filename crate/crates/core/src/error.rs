use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid informer: {0}")]
    InvalidInformer(String),

    #[error("a spec needs at least one informer")]
    NoInformers,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("expected {expected} informer means, got {actual}")]
    InformerCountMismatch { expected: usize, actual: usize },

    #[error("matrix has non-finite entries")]
    NonFiniteMatrix,

    #[error("unsupported matrix: {0}")]
    UnsupportedMatrix(String),

    /// The sum of informer coefficient means is zero, so the expectation has no fixed point.
    #[error("fixed point undefined: sum of informer coefficient means is zero")]
    UndefinedFixedPoint,

    #[error("spec is not order-1 and order-2 stable; variance fixed point is not meaningful")]
    Unstable,

    #[error("variance denominator is {0}, the parameters sit on a stability boundary")]
    CriterionBoundary(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
