use std::path::PathBuf;

use ebct::EbctError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    ParseError { row: usize, column: String, value: String },
    #[error("column {0:?} not found in the input header")]
    MissingColumn(String),
    #[error("{0} already exists; pass --force to overwrite")]
    OutputExists(PathBuf),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error in {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Library(#[from] EbctError),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Success.
pub const EXIT_OK: i32 = 0;
/// Bad input, configuration, or i/o.
pub const EXIT_INPUT: i32 = 1;
/// Outputs written, but a solve or truncation did not converge.
pub const EXIT_NOT_CONVERGED: i32 = 2;
/// Too many bootstrap resamples failed.
pub const EXIT_BOOTSTRAP: i32 = 3;
/// Too many simulation replications failed.
pub const EXIT_DEGENERATE: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(EbctError::NotConverged { .. }) => EXIT_NOT_CONVERGED,
            CliError::Library(EbctError::ResampleDegenerate { .. }) => EXIT_BOOTSTRAP,
            CliError::Library(EbctError::ScenarioDegenerate { .. }) => EXIT_DEGENERATE,
            _ => EXIT_INPUT,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        CliError::Csv { path: path.into(), source }
    }
}
