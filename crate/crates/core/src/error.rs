use thiserror::Error;

/// Errors raised by field arithmetic, scheme construction, decoding and verification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("{0} is not a prime modulus")]
    NotPrime(u64),
    #[error("field size q={q} must exceed the message count M={messages}")]
    FieldTooSmall { q: u64, messages: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("query term out of range: {0}")]
    IndexOutOfRange(String),
    #[error("stage count for round {round} is not an integer ({value})")]
    NonIntegerStageCount { round: usize, value: String },
    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),
    #[error("characteristic system is ill-conditioned (residual {residual:e})")]
    IllConditioned { residual: f64 },
    #[error("no side information left for database {db}, round {round}")]
    LedgerUnderflow { db: usize, round: usize },
    #[error("no decoded symbol of message {message} available at database {db}, round {round}")]
    PoolUnderflow { db: usize, round: usize, message: usize },
    #[error("decode mismatch: {0}")]
    DecodeMismatch(String),
    #[error("{count} desired coordinates are not determined by the answers")]
    DesiredUndetermined { count: usize },
    #[error("{0} is outside the domain of this formula")]
    DomainError(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
