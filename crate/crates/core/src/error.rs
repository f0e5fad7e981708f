use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("ghost index {index} outside -1..={max} for a field of {len} cells")]
    GhostIndex {
        index: isize,
        max: isize,
        len: usize,
    },

    /// Rusanov wavespeed uses sqrt(r), so negative r is rejected rather than clamped.
    #[error("negative r = {r} at level {level}, cell {cell}: Rusanov wavespeed undefined")]
    WavespeedDomain { level: usize, cell: usize, r: f64 },

    #[error("non-finite value in {what} at level {level}, cell {cell}")]
    BlowUp {
        what: &'static str,
        level: usize,
        cell: usize,
    },

    #[error("total depth h = {depth} <= 0 at level {level}, cell {cell}")]
    Positivity {
        level: usize,
        cell: usize,
        depth: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("descent iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 solver, 4 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Shape(_) => 2,
            Error::Io { .. } => 4,
            Error::Iteration { source, .. } => source.exit_code(),
            Error::GhostIndex { .. }
            | Error::WavespeedDomain { .. }
            | Error::BlowUp { .. }
            | Error::Positivity { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
