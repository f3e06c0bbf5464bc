use thiserror::Error;

/// Errors surfaced by the toolkit's library layer.
///
/// The split matters to callers: `InvalidSpec`/`InvalidArgument` mean the
/// request can never succeed and should be reported as a configuration
/// problem, while `Unsupported` marks a combination that is deliberately out
/// of scope (e.g. a banded sum over weights with unbounded support).
#[derive(Debug, Error)]
pub enum Error {
    /// A specification failed validation (bad parameter range, inconsistent
    /// fields). The message names the offending field.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// An operation argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested combination is well-formed but not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A quantity is undefined for the given inputs (e.g. the covariance of a
    /// process driven by infinite-variance innovations).
    #[error("domain error: {0}")]
    Domain(String),

    /// A rate or verdict sits exactly on a boundary where the theory is
    /// silent; callers must pick a side explicitly.
    #[error("boundary case: {0}")]
    Boundary(String),

    /// Required data is missing from an input object (e.g. a path without
    /// retained innovations).
    #[error("missing data: {0}")]
    MissingData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
