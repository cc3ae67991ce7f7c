//! Error type shared by all modules.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input (wrong dimensions, bad parameters, out-of-box data).
    Input(String),
    /// A constructed object failed one of its invariants.
    Invariant(String),
    /// No feasible point exists for the posed problem.
    Infeasible(String),
    /// The objective is unbounded on the feasible set.
    Unbounded(String),
    /// The algorithm broke down numerically; diagnostics attached.
    Numerical(String),
    /// An operation that requires acyclic support found a cycle
    /// (vertex indices in walk order).
    CyclicSupport { cycle: Vec<usize> },
    /// An operation that requires connected support found a second
    /// component (one vertex index per component).
    Disconnected { components: Vec<usize> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Input(s) => write!(f, "input error: {s}"),
            Error::Invariant(s) => write!(f, "invariant violation: {s}"),
            Error::Infeasible(s) => write!(f, "infeasible: {s}"),
            Error::Unbounded(s) => write!(f, "unbounded: {s}"),
            Error::Numerical(s) => write!(f, "numerical failure: {s}"),
            Error::CyclicSupport { cycle } => {
                write!(f, "support contains a cycle through vertices {cycle:?}")
            }
            Error::Disconnected { components } => write!(
                f,
                "support is disconnected; one vertex per component: {components:?}"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Input(format!(
            "{what}: expected dimension {expected}, got {got}"
        )));
    }
    Ok(())
}
