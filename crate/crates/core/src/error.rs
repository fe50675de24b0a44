use thiserror::Error;

/// Errors raised by the arithmetic, geometry and variety layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("operands come from different fields")]
    SpecMismatch,
    #[error("invalid field specification: {0}")]
    InvalidField(String),
    #[error("valuation of the zero element")]
    ZeroValuation,
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("singular matrix")]
    SingularMatrix,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("fixed point closure check failed: {0}")]
    FixedPointInconsistent(String),
    #[error("membership criteria disagree: {0}")]
    InternalDisagreement(String),
    #[error("nearest lattice vertex is ambiguous: {0}")]
    AmbiguousQ(String),
    #[error("determinant classes have no integral solution")]
    EmptyDetClass,
    #[error("lattices have different determinants")]
    DetMismatch,
    #[error("no witness index: {0}")]
    NoWitness(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("constructed tuple is not a point of the variety: {0}")]
    MembershipLost(String),
    #[error("constraint set is empty: {0}")]
    ConstraintEmpty(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
