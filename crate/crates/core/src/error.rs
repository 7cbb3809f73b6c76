use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no feasible offset in beta grid {lo}..={hi} for r_t = {r_t}")]
    Infeasible { lo: i64, hi: i64, r_t: usize },

    #[error("extended fit has beta = {0}, no turning point")]
    NoTurningPoint(f64),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("rule grammar error at position {position}: {message}")]
    Grammar { position: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error(transparent)]
    Remote(#[from] crate::genbridge::remote::RemoteError),

    #[error("generation aborted: {failed} of {attempted} requests failed (threshold {threshold})")]
    FailureThreshold {
        failed: usize,
        attempted: usize,
        threshold: f64,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags the error with the pipeline stage it came from; idempotent.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
