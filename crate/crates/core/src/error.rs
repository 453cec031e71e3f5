use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("item vector has {items} entries but the chain has {nodes} nodes")]
    DimensionMismatch { nodes: usize, items: usize },

    #[error("node {node} is out of range for a chain with {n} nodes")]
    InvalidNode { node: usize, n: usize },

    #[error("edge {from}->{to} is not present in the transition matrix")]
    UnknownEdge { from: usize, to: usize },

    #[error("duplicate entry {0} in selection")]
    DuplicateSelection(String),

    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid item distribution: {0}")]
    InvalidItems(String),

    #[error("budget {k} exceeds the {available} available {kind}")]
    BudgetTooLarge {
        k: usize,
        available: usize,
        kind: &'static str,
    },

    #[error("enumeration needs {needed} evaluations, above the cap of {cap}")]
    CapExceeded { needed: u128, cap: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid trip data: {0}")]
    InvalidTrips(String),

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by caller-supplied parameters rather than by
    /// the content of data files.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidNode { .. }
                | Error::UnknownEdge { .. }
                | Error::DuplicateSelection(_)
                | Error::BudgetTooLarge { .. }
                | Error::CapExceeded { .. }
                | Error::InvalidConfig(_)
                | Error::Unsupported(_)
        )
    }
}
