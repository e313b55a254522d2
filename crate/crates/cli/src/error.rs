use std::io;
use std::path::PathBuf;

use kiparc_core::Error as CoreError;
use thiserror::Error;

/// Failures of a workbench run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("dataset {file}:{line}: {message}")]
    DatasetParse { file: PathBuf, line: u64, message: String },

    #[error("dataset {file}: missing column(s) {missing}")]
    DatasetSchema { file: PathBuf, missing: String },

    #[error("{context}: {source}")]
    Numeric {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("refusing to overwrite {0}; pass --force to replace it")]
    WouldOverwrite(PathBuf),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Wraps a core error. Invalid inputs count as configuration errors;
    /// everything else is a numeric failure.
    pub fn core(context: impl Into<String>, source: CoreError) -> Self {
        let context = context.into();
        match source {
            CoreError::InvalidParameter { .. } | CoreError::InvalidDataset(_) => CliError::Config {
                path: context,
                message: source.to_string(),
            },
            source => CliError::Numeric { context, source },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::DatasetParse { .. } | CliError::DatasetSchema { .. } => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io { .. } | CliError::WouldOverwrite(_) => 4,
        }
    }
}
