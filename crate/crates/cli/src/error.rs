use schur_cmv::SchurError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Unsolvable(String),
    #[error("{what}: expected {expected:?}, found {found:?}")]
    Shape {
        what: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{0}")]
    Verify(String),
    #[error(transparent)]
    Numeric(#[from] SchurError),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Format(_) => 1,
            CliError::Unsolvable(_) => 2,
            CliError::Shape { .. } => 3,
            CliError::Verify(_) => 4,
            CliError::Numeric(e) => match e {
                SchurError::NotSolvable | SchurError::NotASchurSequence { .. } => 2,
                SchurError::ShapeMismatch { .. } => 3,
                SchurError::Certification { .. } => 4,
                _ => 1,
            },
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Format(_) => "format",
            CliError::Unsolvable(_) => "unsolvable",
            CliError::Shape { .. } => "shape",
            CliError::Verify(_) => "verify",
            CliError::Numeric(e) => match e {
                SchurError::NotSolvable | SchurError::NotASchurSequence { .. } => "unsolvable",
                SchurError::ShapeMismatch { .. } => "shape",
                SchurError::Certification { .. } => "certification",
                SchurError::OutsideDisk { .. } => "domain",
                _ => "numeric",
            },
        }
    }

    /// `error[tag]: message` on one line.
    pub fn diagnostic(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.tag(), msg.trim())
    }
}
