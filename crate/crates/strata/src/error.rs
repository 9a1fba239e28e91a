//! Error type shared by every module of the library.

use thiserror::Error;

/// Errors raised by stratum, graph and tautological-ring operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrataError {
    #[error("malformed signature {0:?}: the sum of orders must be 2g-2 with g >= 0")]
    MalformedSignature(Vec<i32>),
    #[error("empty list of signatures")]
    EmptySignatureList,
    #[error("invalid residue condition: {0}")]
    InvalidResidueCondition(String),
    #[error("point {0} is not a pole of order <= -1")]
    NotAPole(String),
    #[error("unknown leg {0}")]
    UnknownLeg(u32),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("edge {0:?} is not horizontal")]
    NotHorizontal((u32, u32)),
    #[error("no level {0}")]
    NoSuchLevel(usize),
    #[error("no level crossing {0}")]
    NoSuchCrossing(usize),
    #[error("malformed level graph: {0}")]
    MalformedGraph(String),
    #[error("graph is not a BIC")]
    NotABic,
    #[error("enhanced profile does not have three levels")]
    NotThreeLevel,
    #[error("incompatible clutch: {0}")]
    IncompatibleClutch(String),
    #[error("unknown profile {0:?}")]
    UnknownProfile(Vec<usize>),
    #[error("leg {0} is not on level {1}")]
    LegNotOnLevel(u32, usize),
    #[error("enhanced profile is not a codimension-one degeneration of the ambient graph")]
    NotCodimOne,
    #[error("operation requires a connected stratum")]
    Disconnected,
    #[error("residue condition is implied by the existing conditions")]
    RedundantCondition,
    #[error("classes live on incompatible ambient graphs")]
    AmbientMismatch,
    #[error("no cached or computable value for {0}")]
    OracleMiss(String),
    #[error("cache file is corrupt: {0}")]
    FileCorrupt(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

impl From<std::io::Error> for StrataError {
    fn from(e: std::io::Error) -> Self {
        StrataError::Io(e.to_string())
    }
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, StrataError>;
