use std::path::PathBuf;

use serde_json::json;

/// Harness failures, each mapped to a distinct exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("i/o failure on {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Compute(#[from] ruinlab::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.into(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Compute(_) => 4,
        }
    }

    /// One-line JSON report for stderr.
    pub fn to_json(&self) -> String {
        let value = match self {
            CliError::Config { field, message } => json!({"error": "ConfigError", "field": field, "message": message}),
            CliError::Io { path, message } => json!({"error": "IOFailure", "path": path, "message": message}),
            CliError::Compute(e) => {
                let field = match e {
                    ruinlab::Error::InvalidParameter { name, .. } => Some(*name),
                    _ => None,
                };
                json!({"error": compute_kind(e), "field": field, "message": e.to_string()})
            }
        };
        value.to_string()
    }
}

fn compute_kind(e: &ruinlab::Error) -> &'static str {
    use ruinlab::Error::*;
    match e {
        InvalidParameter { .. } => "InvalidParameter",
        EmbeddingNotPsd { .. } => "EmbeddingNotPSD",
        TooManyPoints { .. } => "TooManyPoints",
        FactorizationFailure { .. } => "FactorizationFailure",
        CapExceeded { .. } => "CapExceeded",
        MissingConstant { .. } => "MissingConstant",
        WrongBranch { .. } => "WrongBranch",
        GridTooShort { .. } => "GridTooShort",
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
