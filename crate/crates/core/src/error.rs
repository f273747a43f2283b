use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are split into validation failures (bad input, rejected before
/// any work is done) and runtime failures; see [`Error::is_validation`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected")]
    DisconnectedInput,

    #[error("graph has {edges} edges, exhaustive enumeration is limited to {limit}")]
    TooLarge { edges: usize, limit: usize },

    #[error("invalid reconnection target: {0}")]
    InvalidTarget(String),

    #[error("recovery uses {recovered} edges but only {attacked} are attacked")]
    InvalidPair { attacked: usize, recovered: usize },

    #[error("connectivity table has no edges to play over")]
    EmptyTable,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("game {index} has non-positive length")]
    StallGuard { index: usize },

    #[error("state has dimension {got}, graph has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("initial disagreement {disagreement} is already within epsilon {epsilon}")]
    AlreadyConsensus { disagreement: f64, epsilon: f64 },

    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by rejected input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::StallGuard { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
