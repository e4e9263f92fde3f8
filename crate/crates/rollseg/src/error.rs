use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file contents (bad CSV cell, ragged rows, bad manifest line).
    #[error("format error in {path}{}: {message}", fmt_line(.line))]
    Format {
        path: PathBuf,
        /// 1-based line number when known.
        line: Option<usize>,
        message: String,
    },

    /// Structurally invalid Standard MIDI File data.
    #[error("midi error at byte offset {offset}: {message}")]
    Midi { offset: usize, message: String },

    /// Dimension or pitch-range mismatch between matrices/rolls.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Non-finite objective values, degenerate normalization, and the like.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Invalid argument or configuration value.
    #[error("invalid input: {0}")]
    Invalid(String),
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" (line {n})"),
        None => String::new(),
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), line, message: message.into() }
    }

    /// Process exit code for the CLI: 2 input/format, 3 shape, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::Midi { .. } | Error::Invalid(_) => 2,
            Error::Shape(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
