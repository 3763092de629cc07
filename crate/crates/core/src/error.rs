use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("no connected sample for n={n}, p_graph={p_graph} after {retries} retries")]
    Disconnected { n: usize, p_graph: f64, retries: u32 },

    #[error("bitstring has length {got}, graph has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{n} qubits exceeds the cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown optimizer method `{0}`")]
    UnknownMethod(String),

    #[error("evaluation budget exhausted")]
    BudgetExhausted,

    #[error("objective returned non-finite value {value} at evaluation {evaluation}")]
    NonFinite { value: f64, evaluation: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Statistics(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
