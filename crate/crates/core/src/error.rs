use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(u8, u8),
    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u8, alphabet: u8 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("point does not belong to this system: {0}")]
    ForeignPoint(String),
    #[error("negative iterate {0} on a non-invertible system")]
    NotInvertible(i64),
    #[error("pseudo-orbit violation at step {step}: error {error} exceeds delta {delta}")]
    StepViolation { step: usize, error: String, delta: String },
    #[error("endpoint mismatch: first pseudo-orbit ends where the second does not begin")]
    EndpointMismatch,
    #[error("expected a loop pseudo-orbit")]
    NotALoop,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("enumeration budget of {0} states exceeded")]
    BudgetExceeded(usize),
    #[error("point {0} is not chain recurrent at this resolution")]
    NotRecurrent(usize),
    #[error("recipe inapplicable: {0}")]
    Inapplicable(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("no shadow for word {word:?} at this resolution")]
    Unshadowed { word: Vec<usize> },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
