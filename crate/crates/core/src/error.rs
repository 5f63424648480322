use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid state machine: {0}")]
    InvalidMachine(String),
    #[error("machine already has a recover map")]
    AlreadyRecoverable,
    #[error("machine has no recover map; augment it first")]
    MissingRecover,
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("output outside the kernel's alphabet: {0}")]
    OutputOutOfRange(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("infinite Bhattacharyya distance between pairs {0} and {1}")]
    InfiniteDistance(usize, usize),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unsupported channel: {0}")]
    Unsupported(String),
    #[error("block length {n} too short; need at least {min_n}")]
    BlockTooShort { n: usize, min_n: usize },
    #[error("invalid Markov type: {0}")]
    InvalidType(String),
    #[error("inconsistent state path at position {0}")]
    InconsistentPath(usize),
    #[error("need at least {needed} candidates, got {got}")]
    TooFewCandidates { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
