use std::path::PathBuf;

use crate::fit::FitTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "kernel for scale {scale} needs {support} samples but the analysis length is {max_support}; \
         enlarge the signal length or raise f_min"
    )]
    SupportOverflow {
        scale: usize,
        support: usize,
        max_support: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dense oracle refused signal length {length} (limit {limit})")]
    OracleTooLarge { length: usize, limit: usize },

    #[error("finite-difference oracle failed: {0}")]
    OracleEvaluation(String),

    #[error("fit diverged at step {step}: {reason}")]
    FitDiverged {
        step: usize,
        reason: String,
        trace: Box<FitTrace>,
    },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Broad failure class, used by front ends to pick an exit status.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::Config { .. } => ErrorClass::Usage,
            Error::SupportOverflow { .. }
            | Error::InvalidInput(_)
            | Error::Format { .. }
            | Error::Io { .. }
            | Error::OracleTooLarge { .. } => ErrorClass::Data,
            Error::OracleEvaluation(_) | Error::FitDiverged { .. } => ErrorClass::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}
