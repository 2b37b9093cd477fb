use crate::types::MessageId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid identity: raw id must be non-empty")]
    InvalidIdentity,
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("unknown message {0}")]
    UnknownMessage(MessageId),
    #[error("message {0} already has an editorial label")]
    DuplicateEditorialLabel(MessageId),
    #[error("out of order event: expected seq {expected}, got {got}")]
    OutOfOrderEvent { expected: u64, got: u64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("event log refuses writes after a storage failure")]
    WriteRefused,
    #[error("storage failure: {0}")]
    Storage(#[from] std::io::Error),
    #[error("replay failed at line {line}: {reason}")]
    Replay { line: usize, reason: String },
    #[error("config error: {0}")]
    Config(String),
}
