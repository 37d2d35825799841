use thiserror::Error;

/// Errors produced anywhere in the retrieval pipeline.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("message index {index} out of range for K = {messages}")]
    MessageOutOfRange { index: usize, messages: usize },

    #[error("block length {sources}^{messages} overflows")]
    Overflow { sources: usize, messages: usize },

    #[error("block length {length} exceeds the supported maximum of {max} bits")]
    TooLarge { length: u128, max: usize },

    #[error("rate is undefined when nothing is downloaded")]
    ZeroDownload,

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("incomplete transcript: {0}")]
    Incomplete(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("invalid routing table: {0}")]
    Routing(String),

    #[error("malformed bit string: {0}")]
    Bits(String),

    #[error("exhaustive enumeration of {outcomes} outcomes exceeds the bound of {bound}; use sampled mode")]
    EnumerationBound { outcomes: String, bound: u64 },

    #[error("mismatched distributions: {0}")]
    Mismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
