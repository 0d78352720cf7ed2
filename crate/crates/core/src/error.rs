use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("estimated memory {estimate_bytes} bytes exceeds budget of {budget_bytes} bytes")]
    ResourceLimit {
        estimate_bytes: u64,
        budget_bytes: u64,
    },

    #[error("{what} = {requested} is beyond the enumerated range (lambda_max = {available})")]
    OutOfRange {
        what: &'static str,
        requested: f64,
        available: f64,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("quadrature resolution {given} is too coarse; minimal admissible resolution is {minimal}")]
    ResolutionTooCoarse { given: usize, minimal: usize },

    #[error("t = {given} violates the truncation rule t * lambda_max >= 20; minimal admissible t is {minimal}")]
    TruncationRule { given: f64, minimal: f64 },

    #[error("conjugate point: s * sqrt(K) = {0} reaches pi")]
    ConjugatePoint(f64),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("table format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
