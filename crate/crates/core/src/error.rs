//! Error taxonomy shared by every module.

use std::fmt;

/// Failure categories surfaced by the library.
///
/// The runner maps these onto exit codes: anything except `Resource` is an
/// invariant/configuration failure, `Resource` means a search or enumeration
/// budget was exhausted.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the documented domain (bad probability, odd R, ...).
    Domain(String),
    /// A stated precondition does not hold (e.g. dominance required but absent).
    Precondition(String),
    /// A numeric routine failed to converge or produced a degenerate value.
    Numeric(String),
    /// An enumeration or search budget was exceeded.
    Resource(String),
    /// A curve does not cover the λ range a supremum needs.
    Coverage(String),
    /// The distribution violates a model assumption (finite mean in d=1, ...).
    ModelAssumption(String),
    /// A coupled pair of fields or costs violated the monotone coupling.
    CouplingViolation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Precondition(m) => write!(f, "precondition error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::Resource(m) => write!(f, "resource error: {m}"),
            Error::Coverage(m) => write!(f, "coverage error: {m}"),
            Error::ModelAssumption(m) => write!(f, "model assumption error: {m}"),
            Error::CouplingViolation(m) => write!(f, "coupling violation: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
