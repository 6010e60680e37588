use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: u32, right: u32 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("level {level} exceeds depth {depth}")]
    LevelExceedsDepth { level: u32, depth: u32 },

    #[error("misaligned levels in count series")]
    MisalignedLevels,

    #[error("oracle inconsistency at cylinder {cylinder}: {detail}")]
    OracleInconsistency { cylinder: String, detail: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("net resolution exhausted at level {level}: {detail}")]
    ResolutionExhausted { level: usize, detail: String },

    #[error("placement overflow: {generators} generators but only {slots} slots at depth {depth}")]
    PlacementOverflow {
        generators: usize,
        slots: usize,
        depth: u32,
    },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("decode error: {0}")]
    Decode(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
