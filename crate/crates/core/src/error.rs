use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid URL {input:?}: {source}")]
    UrlParse {
        input: String,
        #[source]
        source: url::ParseError,
    },

    #[error("dataset {dataset}: unknown raw label {label:?}")]
    UnknownLabel { dataset: String, label: String },

    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),

    #[error("unknown training configuration {0:?}")]
    UnknownTrainingConfig(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("label extraction failed for text {text_id:?} on model {model_id:?}: {reason}")]
    Extraction {
        text_id: String,
        model_id: String,
        reason: String,
    },

    #[error("meta-learner needs both classes in its supervision ({0})")]
    SingleClass(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
