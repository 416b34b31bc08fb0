use thiserror::Error;

use crate::subset::SubsetMask;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("search space too large: {what} exceeds the cap of {limit}")]
    SearchSpaceTooLarge { what: String, limit: u64 },

    #[error("axiom violation: {0}")]
    ViolationFound(String),

    #[error("petals do not partition the ground set")]
    NotAPartition,

    #[error("petal {0} is weak in the tangle")]
    WeakPetal(usize),

    #[error("{0} is not k-separating")]
    NotKSeparating(SubsetMask),

    #[error("union over petal indices {0:?} breaks the anemone/daisy dichotomy")]
    DichotomyViolation(Vec<usize>),

    #[error("invalid concatenation breakpoints: {0}")]
    InvalidBreakpoints(String),

    #[error("tangle is not robust: separation with side {0} cannot be refined into the flower")]
    NonRobustObstruction(SubsetMask),

    #[error("vertex {0} is not a flower vertex")]
    NotAFlowerVertex(usize),

    #[error("invariant violated: {0}")]
    Invariant(String),
}
