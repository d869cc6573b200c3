//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by readers, writers, and numerical operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file does not conform to its documented format.
    #[error("malformed {format}{}: {detail}", fmt_line(*.line))]
    Format {
        /// Short format name ("WAV", "EMAT", "CSV matrix", "manifest", "lexicon", "TOML").
        format: &'static str,
        /// 1-based line number when the format is line-oriented.
        line: Option<usize>,
        detail: String,
    },

    /// Caller violated an operation's precondition.
    #[error("{0}")]
    Contract(String),

    /// A numerical routine could not produce a result (rank deficiency,
    /// unstable recursion, undefined statistic).
    #[error("{0}")]
    Numeric(String),
}

fn fmt_line(line: Option<usize>) -> String {
    match line {
        Some(n) => format!(" (line {n})"),
        None => String::new(),
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(format: &'static str, detail: impl Into<String>) -> Self {
        Error::Format { format, line: None, detail: detail.into() }
    }

    pub fn format_at(format: &'static str, line: usize, detail: impl Into<String>) -> Self {
        Error::Format { format, line: Some(line), detail: detail.into() }
    }

    pub fn contract(detail: impl Into<String>) -> Self {
        Error::Contract(detail.into())
    }

    pub fn numeric(detail: impl Into<String>) -> Self {
        Error::Numeric(detail.into())
    }

    /// Stable machine-readable kind tag, used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Contract(_) => "contract",
            Error::Numeric(_) => "numeric",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
