use std::path::PathBuf;

use crate::geometry::Point;
use crate::topomap::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("origin occluded at ({}, {})", .0.x, .0.y)]
    OriginOccluded(Point),

    #[error("{what} occluded at ({}, {})", .at.x, .at.y)]
    EndpointOccluded { what: &'static str, at: Point },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node {0} does not exist")]
    MissingNode(NodeId),

    #[error("node {0} is not a ghost")]
    NotAGhost(NodeId),

    #[error("node {goal} is unreachable from {from}")]
    Unreachable { from: NodeId, goal: NodeId },

    #[error("graph has no current node")]
    NoCurrentNode,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty path")]
    EmptyPath,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
