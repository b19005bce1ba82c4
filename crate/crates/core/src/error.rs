use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown class label `{0}`")]
    Label(String),

    #[error("corpus is empty after filtering")]
    EmptyCorpus,

    #[error("requested rank {requested} but at most {achievable} is achievable")]
    Rank { requested: usize, achievable: usize },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("optimizer diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("no precomputed features for sample `{sample_id}` with mask hash {mask_hash}")]
    Coverage {
        sample_id: String,
        mask_hash: String,
    },

    #[error("solver failed at w = ({w1}, {w2}): {source}")]
    Solver {
        w1: f64,
        w2: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Whether the error stems from configuration rather than from running a stage.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
