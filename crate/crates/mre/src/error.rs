use std::path::PathBuf;

use crate::augment::AugmentError;

#[derive(Debug, thiserror::Error)]
pub enum MreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: schema error: {message}", path.display())]
    Schema { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] mre_core::Error),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error("{0}")]
    Config(String),
    #[error("{} {what} failed:{}", items.len(), items.iter().map(|i| format!("\n  {i}")).collect::<String>())]
    Failures { what: &'static str, items: Vec<String> },
}

impl MreError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MreError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = MreError> = std::result::Result<T, E>;
