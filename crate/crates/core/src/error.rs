use alloc::string::String;

/// Errors reported by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("network contains a directed cycle")]
    CyclicGraph,
    #[error("unknown node index {0}")]
    UnknownNode(usize),
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("source set must be nonempty")]
    EmptySubset,
    #[error("{size} sources exceed the exhaustive limit of {limit}")]
    TooManySources { size: usize, limit: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("distortion target is not achievable even with unlimited rates")]
    UnachievableDistortion,
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("rate vector is not inside the region")]
    NotInRegion,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
