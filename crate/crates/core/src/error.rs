use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A moment, series or integral that does not converge.
    #[error("divergent: {0}")]
    Divergent(String),

    #[error("operation requires one-dimensional measures")]
    NotOneDimensional,

    #[error("cost is not convex on [0, inf); the monotone coupling is not optimal")]
    NonConvexCost,

    #[error("quantile function unavailable for {0}")]
    QuantileUnavailable(&'static str),

    #[error("problem too large: {atoms} atoms exceeds the limit of {limit}")]
    SizeLimit { atoms: usize, limit: usize },

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("local growth violation: f(r)/r^p appears unbounded as r -> 0")]
    LocalGrowthViolation,

    /// The optimal plan had to use an edge whose cost overflowed to +inf.
    #[error("optimal plan uses an infinite-cost edge")]
    InfCost,

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("no constants on the search grid dominate the observed tails")]
    Infeasible,

    #[error("need at least {needed} rows, found {found}")]
    InsufficientRows { needed: usize, found: usize },

    #[error("unknown case: {0}")]
    UnknownCase(String),

    #[error("method mismatch: {0}")]
    MethodMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
