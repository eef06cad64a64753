//! Crate-wide error type.
//!
//! Every fallible operation in the crate returns [`enum@Error`]. Variants are
//! grouped by contract: construction/domain violations, text-input parse
//! failures (always carrying a 1-based line number), rank-deficient linear
//! systems (naming the offending columns) and estimation failures
//! (non-convergence keeps the last iterate for post-mortems).

use thiserror::Error;

/// Error type shared by all toolkit operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A series or matrix violated a structural invariant (length, finiteness,
    /// date alignment, emptiness, ...). The message names the violated
    /// precondition and, where applicable, the offending date.
    #[error("domain error: {0}")]
    Domain(String),

    /// A text input could not be parsed. `line` is 1-based and counts the
    /// header row.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A least-squares design was rank deficient; `columns` names the columns
    /// involved in the dependency.
    #[error("rank-deficient design; dependent columns: {columns:?}")]
    RankDeficient { columns: Vec<String> },

    /// Numerical estimation failed outright (singular system, degenerate
    /// objective, no candidate survived).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// An iterative optimizer hit its iteration cap before meeting its
    /// convergence tolerance. `last_iterate` is the final parameter vector.
    #[error("failed to converge: {message}")]
    NonConvergence {
        message: String,
        last_iterate: Vec<f64>,
    },

    /// Filesystem wrapper: the underlying `std::io` message plus the path.
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Shorthand for a [`Error::Domain`] value.
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Shorthand for a [`Error::Parse`] value.
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// Shorthand for a [`Error::Estimation`] value.
    pub(crate) fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }

    /// Wrap an I/O error with the path it occurred on.
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_name_their_payload() {
        let e = Error::parse(3, "bad cell");
        assert_eq!(e.to_string(), "parse error at line 3: bad cell");
        let e = Error::RankDeficient {
            columns: vec!["pt".into()],
        };
        assert!(e.to_string().contains("pt"));
    }

    #[test]
    fn error_is_send_sync() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Error>();
    }
}
