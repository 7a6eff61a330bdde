use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An input violated a structural invariant of the domain types.
    #[error("domain error: {0}")]
    Domain(String),

    /// An alternative outside the universe of a weak order was referenced.
    #[error("alternative {alternative} is not in the universe 0..{universe}")]
    UnknownAlternative { alternative: usize, universe: usize },

    /// A brute-force routine would exceed its configured work cap.
    #[error("capacity exceeded: {required} candidates exceed the enumeration cap of {cap}")]
    Capacity { cap: u64, required: u128 },

    /// Forced pairs or fixings admit no matching.
    #[error("infeasible matching constraints: {0}")]
    Infeasible(String),

    /// A team receives more participants than its quota allows.
    #[error("team {team} holds {size} participants but its quota is {quota}")]
    QuotaViolation { team: usize, size: usize, quota: usize },

    /// The document could not be parsed.
    #[error("{0}")]
    Parse(#[from] ParseError),
}

/// A positional parse failure: `path` locates the offending element
/// (e.g. `team_prefs[1][0]`).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {path}: {reason}")]
pub struct ParseError {
    pub path: String,
    pub reason: String,
}

impl ParseError {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { path: path.into(), reason: reason.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
