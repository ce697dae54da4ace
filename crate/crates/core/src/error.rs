use thiserror::Error;

/// Errors surfaced by the library. Numerical impossibilities inside the
/// likelihood and prior use `-inf` instead and never show up here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("bid {bid} lies outside the support [{lo}, {hi}]")]
    OutOfSupport { bid: f64, lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("sampler initialization failed after {tries} prior draws")]
    Initialization { tries: usize },

    #[error("empty chain")]
    EmptyChain,

    #[error("config error: {0}")]
    Config(String),

    #[error("estimation did not converge: {0}")]
    NotConverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::InvalidStructure(_) => "invalid_structure",
            Error::OutOfSupport { .. } => "out_of_support",
            Error::Degenerate(_) => "degenerate",
            Error::Domain(_) => "domain",
            Error::Data(_) => "data",
            Error::Initialization { .. } => "initialization",
            Error::EmptyChain => "empty_chain",
            Error::Config(_) => "config",
            Error::NotConverged(_) => "not_converged",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn arg(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
