use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bundle data: {0}")]
    InvalidSpec(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid template: {0}")]
    InvalidTemplate(String),

    #[error("F_{factor}^2 is not positive at s = {s:.6} (value {value:.3e})")]
    Positivity { factor: usize, s: f64, value: f64 },

    #[error("cell index {cell} out of range for a grid of {cells} cells")]
    CellOutOfRange { cell: usize, cells: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite {component} at cell {cell}")]
    NonFinite { cell: usize, component: String },

    #[error("closing conditions violated: {0}")]
    Closing(String),

    #[error("time step underflow at t = {t:.6e} (dt = {dt:.3e})")]
    DtUnderflow { t: f64, dt: f64 },

    #[error("invalid flow configuration: {0}")]
    InvalidFlowConfig(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::InvalidTemplate(_)
                | Error::Positivity { .. }
                | Error::Closing(_)
                | Error::InvalidFlowConfig(_)
                | Error::Config { .. }
                | Error::Format { .. }
        )
    }
}
