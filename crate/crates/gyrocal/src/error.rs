use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    /// Malformed input data. `row` is 1-based and includes the header line.
    #[error("format error at row {row}: {message}")]
    Format { row: usize, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("rank-deficient system: rank {rank} < {expected}; unobservable parameters: {}", unobservable.join(", "))]
    RankDeficient {
        rank: usize,
        expected: usize,
        unobservable: Vec<String>,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("state error: {0}")]
    State(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code contract: 0 success, 2 usage, 3 data/format, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::Format { .. }
            | Error::InsufficientData(_)
            | Error::Partition(_)
            | Error::Config(_)
            | Error::Io(_) => 3,
            Error::RankDeficient { .. } | Error::Numerical(_) | Error::State(_) => 4,
        }
    }
}
