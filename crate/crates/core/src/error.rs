use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PqError {
    #[error("extract from empty queue")]
    Underflow,
    #[error("duplicate key rejected by distinct-keys implementation")]
    DuplicateKey,
    #[error("region is full")]
    CapacityFault,
    #[error("value out of range for field of width {width}")]
    RangeFault { width: usize },
    #[error("pair at slots {slot},{slot_next} holds equal elements and cannot encode a bit", slot_next = slot + 1)]
    UndecodablePair { slot: usize },
    #[error("structure state is corrupt: {0}")]
    Corruption(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("trace parse error at line {line}: {msg}")]
    Trace { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, PqError>;
