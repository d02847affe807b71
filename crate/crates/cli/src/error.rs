use std::fmt;
use std::path::PathBuf;

/// One problem found while validating an experiment spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecIssue {
    pub field: String,
    pub reason: String,
}

impl SpecIssue {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SpecIssue { field: field.into(), reason: reason.into() }
    }
}

impl fmt::Display for SpecIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn list(issues: &[SpecIssue]) -> String {
    issues.iter().map(|i| format!("\n  {i}")).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid experiment spec:{}", list(.0))]
    Invalid(Vec<SpecIssue>),
    #[error("experiment {experiment} at {point}: {source}")]
    Run {
        experiment: String,
        point: String,
        source: selfnorm::Error,
    },
    #[error("{0}")]
    Output(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
