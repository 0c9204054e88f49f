use std::path::Path;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Bad or unreadable experiment configuration. `key` is the dotted path
    /// of the offending entry, empty for whole-file problems.
    #[error("{}", config_message(.key, .reason))]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {reason}")]
    Record { path: String, reason: String },

    #[error(transparent)]
    Core(#[from] bayrn_core::Error),
}

fn config_message(key: &str, reason: &str) -> String {
    if key.is_empty() {
        format!("config error: {reason}")
    } else {
        format!("config error at `{key}`: {reason}")
    }
}

impl LabError {
    pub fn config(key: impl Into<String>, reason: impl ToString) -> Self {
        LabError::Config { key: key.into(), reason: reason.to_string() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io { path: path.display().to_string(), source }
    }

    pub fn record(path: &Path, reason: impl ToString) -> Self {
        LabError::Record { path: path.display().to_string(), reason: reason.to_string() }
    }

    /// Process exit code: 1 for configuration problems, 2 for anything that
    /// fails while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => 1,
            _ => 2,
        }
    }
}
