use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("string size must be at least 1")]
    ZeroStringSize,

    #[error("population is empty")]
    EmptyPopulation,

    #[error("individual {index} has not been evaluated")]
    Unevaluated { index: usize },

    #[error("bit length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid bitstring character {0:?}")]
    InvalidAllele(char),

    #[error("unknown problem type {0}")]
    UnknownProblem(i32),

    #[error("string size {size} is incompatible with problem {problem}: {constraint}")]
    IncompatibleSize {
        problem: i32,
        size: usize,
        constraint: String,
    },

    #[error("problem type {0} is already registered")]
    DuplicateProblemId(i32),

    #[error("unitation {u} out of range 0..={max}")]
    UnitationOutOfRange { u: usize, max: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("model tables are inconsistent: {0}")]
    InconsistentModel(String),

    #[error("bit {candidate} cannot be tested in tree {tree}: {reason}")]
    InvalidSplit {
        tree: usize,
        candidate: usize,
        reason: &'static str,
    },

    #[error("network has no valid variable ordering")]
    CyclicNetwork,

    #[error("replacement window {window} exceeds population size {size}")]
    WindowTooLarge { window: usize, size: usize },

    #[error("no generation has completed yet")]
    NoGenerations,

    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{key}: {message}")]
    Validation { key: &'static str, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed report: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
