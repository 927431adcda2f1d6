use std::path::PathBuf;

use crate::corpus::Label;
use crate::lang::LanguageId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },

    #[error("line {line}: unknown label {value:?}")]
    UnknownLabel { line: usize, value: String },

    #[error("invalid language code {0:?} (expected [a-z][a-z0-9]{{1,7}})")]
    InvalidLanguage(String),

    #[error("language {0} is not present in the corpus")]
    UnknownLanguage(LanguageId),

    #[error("duplicate record for id {id:?} in language {lang}")]
    DuplicateRecord { id: String, lang: LanguageId },

    #[error("label conflict for id {id:?}: {}", format_labels(.labels))]
    LabelConflict {
        id: String,
        labels: Vec<(LanguageId, Label)>,
    },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("span ({start}, {end}) is out of bounds for a context of {len} characters")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },

    #[error("marker {0:?} already occurs in the context")]
    MarkerInContext(String),

    #[error("translator {translator} failed on example {id:?}: {message}")]
    Translation {
        translator: String,
        id: String,
        message: String,
    },

    #[error("invalid matrix: {0}")]
    Matrix(String),

    #[error("trainer: {0}")]
    Trainer(String),

    #[error("cell ({target}, {augmentor}): {source}")]
    Cell {
        target: LanguageId,
        augmentor: LanguageId,
        #[source]
        source: Box<Error>,
    },

    #[error("greedy point k={k} for {target}: {source}")]
    CurvePoint {
        target: LanguageId,
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_labels(labels: &[(LanguageId, Label)]) -> String {
    labels
        .iter()
        .map(|(lang, label)| format!("{lang}={label}"))
        .collect::<Vec<_>>()
        .join(", ")
}
