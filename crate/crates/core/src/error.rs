//! Error type shared by every module of the crate.

use std::fmt;
use std::path::PathBuf;

/// Errors produced by scenario generation, estimation and the experiment
/// harness.
#[derive(Debug)]
pub enum Error {
    /// An argument is malformed: non-finite values, out-of-range parameters,
    /// empty inputs.
    InvalidInput(String),

    /// Two operands do not have compatible dimensions.
    DimensionMismatch(String),

    /// A prior is degenerate: some device has zero sample variance, so the
    /// matrix `D` would not be positive definite.
    DegeneratePrior(String),

    /// A pre/post-processing function was evaluated outside its domain
    /// (e.g. the logarithm of a non-positive value).
    Domain(String),

    /// A numerical routine failed in a way that signals a bug rather than a
    /// recoverable condition (singular marginal precision, SVD divergence).
    NumericalFailure(String),

    /// A scenario/spec file could not be parsed.
    SpecParse(String),

    /// An I/O operation failed; carries the offending path.
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::DegeneratePrior(msg) => write!(f, "degenerate prior: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::SpecParse(msg) => write!(f, "spec parse error: {msg}"),
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
