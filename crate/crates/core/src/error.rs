use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed JSON at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unexpected document structure: {0}")]
    Structure(String),

    #[error("invalid state transition: {0}")]
    State(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unknown column `{0}`")]
    Lookup(String),

    #[error("insufficient rows: need at least {required}, have {available}")]
    InsufficientRows { required: usize, available: usize },

    #[error("too few samples: need at least {required}, have {available}")]
    TooFewSamples { required: usize, available: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("unauthorized: auth token mismatch")]
    Unauthorized,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

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

    /// Stable machine-readable tag, used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse_error",
            Error::Structure(_) => "structure_error",
            Error::State(_) => "state_error",
            Error::EmptyInput(_) => "empty_input",
            Error::Lookup(_) => "lookup_error",
            Error::InsufficientRows { .. } => "insufficient_rows",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::Shape(_) => "shape_error",
            Error::Config(_) => "config_error",
            Error::Diverged { .. } => "training_diverged",
            Error::Unauthorized => "unauthorized",
            Error::Io { .. } => "io_error",
            Error::Csv(_) => "csv_error",
            Error::Json(_) => "json_error",
        }
    }
}
