use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("triplet sets overlap")]
    OverlappingSets,
    #[error("variable index {0} is outside the universe")]
    IndexOutOfRange(usize),
    #[error("context binds variable {0}, which also appears in the triplet")]
    ContextClash(usize),
    #[error("context binding is invalid: {0}")]
    InvalidContext(String),
    #[error("triplet has an empty side")]
    EmptySide,
    #[error("triplets carry different contexts and cannot be compared")]
    Incomparable,
    #[error("models are defined over different universes")]
    UniverseMismatch,
    #[error("models are closed under different axiom levels")]
    LevelMismatch,
    #[error("universe has {size} variables; this operation is limited to {limit}")]
    UniverseTooLarge { size: usize, limit: usize },
    #[error("universe is limited to 128 variables")]
    CapacityExceeded,
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("model is not closed under its axiom level")]
    NotClosed,
    #[error("invalid triplet: {0}")]
    InvalidTriplet(String),
    #[error("closure step budget exhausted")]
    BudgetExhausted,
    #[error("variable `{0}` already exists; cannot introduce the auxiliary context variable")]
    AuxNameCollision(String),
    #[error("invalid variable sets: {0}")]
    InvalidSets(String),
    #[error("recursion depth exhausted before a case applied")]
    DepthExhausted,
    #[error("naturalness assumption violated at plan step {step}")]
    NaturalnessViolated { step: usize },
    #[error("conditioning event has zero probability")]
    ZeroConditioner,
    #[error("variable `{0}` is missing from the table")]
    MissingVariable(String),
    #[error("table does not match the graph: {0}")]
    TableMismatch(String),
    #[error("graph contains a cycle")]
    Cyclic,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("table does not cover the full product domain")]
    IncompleteDomain,
    #[error("duplicate assignment in table row {0}")]
    DuplicateRow(usize),
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("table has zero-probability rows; the requested axiom level needs a strictly positive table")]
    NotPositive,
    #[error("extracted model is not closed under composition")]
    NotCompositional,
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
