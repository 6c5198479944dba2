use std::fmt;

use thiserror::Error;

/// Errors raised by the order-theoretic operations.
///
/// The variants mirror the failure classes the command-line front end maps
/// onto exit codes: structural and precondition problems are input errors,
/// budget exhaustion is reported separately from "nothing exists".
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed data: indices outside a carrier, non-increasing sequences,
    /// carriers of mismatched size.
    #[error("structural error: {0}")]
    Structural(String),
    /// An operation was called on inputs that violate its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A numeric argument lies outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A sequence has no prefix in the block it is evaluated against.
    #[error("coverage error: no element of the block is a prefix of {0}")]
    Coverage(String),
    /// An exhaustive search hit its enumeration cap before finishing.
    #[error("budget exceeded: {0}")]
    Budget(BudgetReport),
    /// A checked postcondition failed. This signals a bug, not bad input.
    #[error("postcondition violated: {0}")]
    Postcondition(String),
    /// A document could not be read or does not describe a well-formed object.
    #[error("{0}")]
    Parse(ParseError),
}

/// Where and why a document was rejected.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ParseError {
    pub source: String,
    /// 1-based line and column, when the source format tracks positions.
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((line, col)) => write!(f, "{}:{line}:{col}: {}", self.source, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

/// Progress made by a search before its budget ran out.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct BudgetReport {
    pub context: String,
    pub explored: u64,
    pub limit: u64,
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} explored {} of at most {} candidates",
            self.context, self.explored, self.limit
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
