use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("negative {what}: {value}")]
    NegativeInput { what: &'static str, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Zero quantization noise on a subcarrier that carries signal needs an
    /// unbounded fronthaul rate.
    #[error("infinite fronthaul load at rrh {rrh}, subcarrier {sc}")]
    InfiniteLoad { rrh: usize, sc: usize },

    #[error("fronthaul rate at rrh {rrh}, subcarrier {sc} is not on the 2B/N grid")]
    OffGrid { rrh: usize, sc: usize },

    #[error("integer bit allocation required")]
    MissingBits,

    #[error("no usable channel: {0}")]
    NoUsableChannel(String),

    #[error("dual bracket could not be established: {0}")]
    InfeasibleBracket(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid template: {0}")]
    InvalidTemplate(String),

    #[error("unknown {what}: {name}")]
    Unknown { what: &'static str, name: String },

    /// A solver produced a result that breaks one of its own guarantees.
    #[error("internal solver error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the error was caused by the caller's input rather than by
    /// a failure inside a solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidScenario(_)
                | Error::IndexOutOfRange { .. }
                | Error::NegativeInput { .. }
                | Error::Shape(_)
                | Error::OffGrid { .. }
                | Error::MissingBits
                | Error::NoUsableChannel(_)
                | Error::Precondition(_)
                | Error::InvalidTemplate(_)
                | Error::Unknown { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
