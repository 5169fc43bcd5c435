use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("{name} = {value} is outside the valid range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("vertex {vertex} is not in 1..={n}")]
    VertexOutOfRange { vertex: u32, n: u32 },

    #[error("block sizes sum to {got}, expected a partition of {n} vertices")]
    NotAPartition { got: u64, n: u32 },

    #[error("checkpoints must be sorted and lie in [0, {horizon}]")]
    BadCheckpoints { horizon: f64 },

    #[error("series did not reach the requested tolerance within {terms} terms")]
    Truncation { terms: usize },

    #[error("integration became unstable at t = {t}: rho({k}) = {value:e}; use a smaller dt")]
    Unstable { t: f64, k: usize, value: f64 },

    #[error("malformed soup record at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn out_of_range(name: &'static str, value: f64, range: impl Into<String>) -> Error {
    Error::OutOfRange {
        name,
        value,
        range: range.into(),
    }
}
