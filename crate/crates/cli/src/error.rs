use std::path::Path;

use hicp_core::error::{
    AnnotationError, ConfigError, CropError, DepthIoError, Eval3dError, EvalError, GeometryError, LayoutError,
    RegistrationError,
};
use thiserror::Error;

/// Failure of a subcommand, carrying its process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Empty(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Empty(_) => 3,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn config(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {err}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches the offending file to a core error and picks the exit class:
/// unreadable or undecodable files are I/O failures, everything else is a
/// configuration or input-validation failure.
pub trait Context<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

macro_rules! classify {
    ($ty:ty, $($io:pat),*) => {
        impl<T> Context<T> for Result<T, $ty> {
            fn at(self, path: &Path) -> CliResult<T> {
                self.map_err(|e| match e {
                    $($io => CliError::io(path, &e),)*
                    #[allow(unreachable_patterns)]
                    _ => CliError::config(path, &e),
                })
            }
        }
    };
}

classify!(AnnotationError, AnnotationError::Io(_), AnnotationError::Parse { .. });
classify!(DepthIoError, _);
classify!(Eval3dError, Eval3dError::Io(_), Eval3dError::Parse { .. });
classify!(RegistrationError, RegistrationError::Parse { .. });
classify!(ConfigError, ConfigError::Io(_));
classify!(CropError, CropError::Image { .. });
classify!(EvalError,);
classify!(GeometryError,);
classify!(LayoutError,);
