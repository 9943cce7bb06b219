use thiserror::Error;

use crate::engine::Bracket;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("covering relation has a cycle through `{0}` and `{1}`")]
    Cycle(String, String),
    #[error("space of {size} points exceeds the size limit of {limit}")]
    SizeLimit { size: usize, limit: usize },
    #[error("map is not order-preserving: `{0}` <= `{1}` but their images are not related")]
    NotMonotone(String, String),
    #[error("map is not total: no value for `{0}`")]
    IncompleteMap(String),
    #[error("maps do not share a signature")]
    MismatchedSignature,
    #[error("search budget of {budget} exceeded{}", fmt_bracket(.bracket))]
    SearchBudgetExceeded { budget: usize, bracket: Option<Bracket> },
    #[error("timed out{}", fmt_bracket(.bracket))]
    Timeout { bracket: Option<Bracket> },
    #[error("level cap {cap} reached{}", fmt_bracket(.bracket))]
    LevelCap { cap: usize, bracket: Option<Bracket> },
    #[error("space `{0}` is not connected")]
    NotConnected(String),
    #[error("subset is empty")]
    EmptySubset,
    #[error("the source space of a cospan must be nonempty")]
    EmptySpace,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cross-check mismatch: {0}")]
    CrossCheckMismatch(String),
}

fn fmt_bracket(b: &Option<Bracket>) -> String {
    match b {
        Some(b) => format!(" (value in {b})"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches the best known bracket to budget-type errors.
    pub(crate) fn with_bracket(self, b: Bracket) -> Self {
        match self {
            Error::SearchBudgetExceeded { budget, .. } => Error::SearchBudgetExceeded {
                budget,
                bracket: Some(b),
            },
            Error::Timeout { .. } => Error::Timeout { bracket: Some(b) },
            Error::LevelCap { cap, .. } => Error::LevelCap {
                cap,
                bracket: Some(b),
            },
            e => e,
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::SearchBudgetExceeded { .. } | Error::Timeout { .. } | Error::LevelCap { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
