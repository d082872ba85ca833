use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid outcome: {0}")]
    InvalidOutcome(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("malformed model: {0}")]
    Model(String),

    #[error("missing weight {0}")]
    IncompleteWeights(String),

    #[error("{what} has {size} rows, above the limit of {limit}")]
    SizeLimit {
        what: String,
        size: u128,
        limit: u128,
    },

    #[error("variable {variable} is last in factors #{first} and #{second}")]
    DuplicateLast {
        variable: String,
        first: usize,
        second: usize,
    },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("net is not a valid UCP-net: {0}")]
    ValidityRequired(String),

    #[error("unknown action {0:?}")]
    UnknownAction(String),

    #[error("evidence has zero probability")]
    ZeroProbability,

    #[error("action {0:?} is not given by an explicit support; compile it first")]
    CompileFirst(String),

    #[error("weight space is empty")]
    EmptyWeightSpace,

    #[error("every response of query {0} contradicts the weight space")]
    ContradictoryQuery(String),

    #[error("response contradicts the weight space; conflicting constraints: {}", .constraints.join(", "))]
    Contradiction { constraints: Vec<String> },

    #[error("{dim} identifiers exceed the dimension limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{message} (at {key:?})")]
    Semantic { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code printed by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidOutcome(_) => "E_OUTCOME",
            Error::InvalidAssignment(_) => "E_ASSIGNMENT",
            Error::Model(_) => "E_MODEL",
            Error::IncompleteWeights(_) => "E_WEIGHTS",
            Error::SizeLimit { .. } => "E_SIZE_LIMIT",
            Error::DuplicateLast { .. } => "E_DUPLICATE_LAST",
            Error::Argument(_) => "E_ARGUMENT",
            Error::ValidityRequired(_) => "E_INVALID_NET",
            Error::UnknownAction(_) => "E_UNKNOWN_ACTION",
            Error::ZeroProbability => "E_ZERO_PROBABILITY",
            Error::CompileFirst(_) => "E_COMPILE_FIRST",
            Error::EmptyWeightSpace => "E_INFEASIBLE",
            Error::ContradictoryQuery(_) => "E_CONTRADICTORY_QUERY",
            Error::Contradiction { .. } => "E_CONTRADICTION",
            Error::DimensionLimit { .. } => "E_DIMENSION_LIMIT",
            Error::Parse { .. } => "E_PARSE",
            Error::Semantic { .. } => "E_SEMANTIC",
            Error::Io(_) => "E_IO",
        }
    }

    /// Usage and input-format problems, as opposed to domain failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Semantic { .. } | Error::Io(_) | Error::Argument(_)
        )
    }

    pub(crate) fn semantic(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Semantic {
            key: key.into(),
            message: message.into(),
        }
    }
}
