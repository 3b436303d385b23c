use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },

    #[error("{path}: {inner}")]
    InFile { path: String, inner: Box<CliError> },

    #[error("unresolved reference: {0}")]
    Unresolved(String),

    #[error(transparent)]
    Core(#[from] summing_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
