use thiserror::Error;

/// Errors produced by the engines and the batch executor.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChessfadError {
    /// The chunk size must evenly divide the number of variables.
    #[error("chunk size {csize} does not divide the variable count {n}")]
    ChunkSize { csize: usize, n: usize },

    /// No monomorphized engine exists for this chunk size.
    #[error("unsupported chunk size {0} (see chessfad::SUPPORTED_CSIZES)")]
    UnsupportedChunkSize(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("worker count must be at least 1")]
    NoWorkers,

    /// Strict counting mode saw an operation outside {{+, -, *}}.
    #[error("function used {0} operation(s) outside the add/mul set required by strict counting")]
    NonCountableOps(u64),
}

pub type Result<T> = std::result::Result<T, ChessfadError>;
