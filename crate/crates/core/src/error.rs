use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("degree {0} out of range (3..=32)")]
    Degree(usize),

    #[error("malformed address literal {0:?}")]
    AddressSyntax(String),

    #[error("address {addr:?}: digit {digit} invalid at position {pos} for d = {d}")]
    AddressDigit {
        addr: String,
        pos: usize,
        digit: usize,
        d: u8,
    },

    #[error("malformed edge literal {0:?}")]
    EdgeSyntax(String),

    #[error("edge {0} is not positively oriented")]
    NegativeEdge(String),

    #[error("invalid permutation {0:?}")]
    Permutation(Vec<usize>),

    #[error("local permutation at {0} moves color 0")]
    MovesZero(String),

    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(u8, u8),

    #[error("edge {0} is not stabilized by the automorphism")]
    NotStabilized(String),

    #[error("automorphism does not fix the base vertex")]
    NotRooted,

    #[error("expected {expected} element, got {got}")]
    WrongClass {
        expected: &'static str,
        got: &'static str,
    },

    #[error("empty input")]
    Empty,

    #[error("word literal: {0}")]
    WordSyntax(String),

    #[error("generator index {index} out of range ({count} generators)")]
    GeneratorIndex { index: usize, count: usize },

    #[error("word has no eligible special index")]
    NoSpecialIndex,

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("enumeration of {0} elements exceeds the size guard")]
    TooLarge(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("json: {0}")]
    Json(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
