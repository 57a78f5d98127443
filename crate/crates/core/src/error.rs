use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("margin exhausted: derivative order {order} exceeds N/4 = {limit}")]
    MarginExhausted { order: usize, limit: usize },
    #[error("domain: {0}")]
    Domain(String),
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("resample: {0}")]
    Resample(String),
    #[error("window: {0}")]
    Window(String),
    #[error("zero norm: {0}")]
    ZeroNorm(String),
    #[error("mode: {0}")]
    Mode(String),
    #[error("finite-difference step: {0}")]
    FdStep(String),
    #[error("dimension: {0}")]
    Dimension(String),
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error("tolerance: {0}")]
    Tolerance(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 capacity/truncation, 4 numerical, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Mode(_) => 2,
            Error::Capacity(_)
            | Error::Grid(_)
            | Error::Truncation(_)
            | Error::MarginExhausted { .. }
            | Error::Alignment(_)
            | Error::GridMismatch(_)
            | Error::Resample(_)
            | Error::Window(_)
            | Error::Dimension(_) => 3,
            Error::Domain(_) | Error::ZeroNorm(_) | Error::FdStep(_) | Error::Tolerance(_) => 4,
            Error::Io(_) | Error::Format(_) => 5,
        }
    }
}
