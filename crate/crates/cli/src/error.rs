use std::path::PathBuf;

use belief::BeliefError;
use thiserror::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_DEGENERATE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error(transparent)]
    Belief(#[from] BeliefError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Io { .. } | CliError::Csv { .. } => EXIT_DATA,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Belief(e) => match e {
                BeliefError::Config(_)
                | BeliefError::UnknownColumn(_)
                | BeliefError::InvalidArgument(_)
                | BeliefError::InvalidLambda(_) => EXIT_USAGE,
                BeliefError::SingularDesign { .. }
                | BeliefError::Separation { .. }
                | BeliefError::LinkRange { .. }
                | BeliefError::Singular(_) => EXIT_DEGENERATE,
                BeliefError::NonFinite { .. }
                | BeliefError::OutOfDomain { .. }
                | BeliefError::TooManyLevels { .. }
                | BeliefError::Parse { .. }
                | BeliefError::EmptyData
                | BeliefError::LengthMismatch { .. }
                | BeliefError::InvalidResponse { .. }
                | BeliefError::NotPowerOfTwo(_) => EXIT_DATA,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
