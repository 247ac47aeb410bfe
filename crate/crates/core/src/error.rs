use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Φ-function: {0}")]
    InvalidPhi(String),

    #[error("degenerate Φ-function: {0}")]
    DegeneratePhi(String),

    #[error("unbounded inverse request: Φ(t) < {0} for all t up to {1:e}")]
    UnboundedInverse(f64, f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid subspace: {0}")]
    InvalidSubspace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hypothesis fails: {0}")]
    HypothesisFails(String),

    #[error("no convergence after {iterations} iterations: {context}")]
    NoConvergence { iterations: usize, context: String },

    #[error("retry budget exhausted after {retries} attempts: {detail}")]
    RetriesExhausted { retries: usize, detail: String },

    #[error("net too small: {0}")]
    NetTooSmall(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
