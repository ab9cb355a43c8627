use thiserror::Error;

/// Errors raised by construction, set algebra and the analyses built on them.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed stage {stage}: {reason}")]
    MalformedStage { stage: usize, reason: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("insufficient geometry depth: stage {needed} required, {built} built")]
    InsufficientDepth { needed: usize, built: usize },

    #[error("degenerate polynomial: stage {stage} has a single column")]
    DegeneratePolynomial { stage: usize },

    #[error("empty polynomial list")]
    EmptyBlockList,

    #[error("non-discriminating block {block}: it lies in both or neither index set")]
    NonDiscriminatingBlock { block: u64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("sweep budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
