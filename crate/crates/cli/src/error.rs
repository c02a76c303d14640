use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration; the message names the field path.
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] frontlab_core::Error),
    #[error("io error at {path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// One or more jobs failed; each entry is `job: message`.
    #[error("{} job(s) failed: {}", .0.len(), .0.join("; "))]
    Jobs(Vec<String>),
    #[error("assertions failed: {}", .0.join("; "))]
    Assertions(Vec<String>),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Assertions(_) => 3,
            _ => 1,
        }
    }
}
