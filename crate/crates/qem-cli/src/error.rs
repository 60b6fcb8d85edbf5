//! Process-level error classes and their exit codes.

use std::fmt;

use qem_core::Error as CoreError;

/// Exit codes: 2 config, 3 data, 4 training divergence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AppError {
    Config(String),
    Data(String),
    Training(String),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> AppError {
        AppError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> AppError {
        AppError::Data(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) => 3,
            AppError::Training(_) => 4,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "config error: {msg}"),
            AppError::Data(msg) => write!(f, "data error: {msg}"),
            AppError::Training(msg) => write!(f, "training error: {msg}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<CoreError> for AppError {
    fn from(err: CoreError) -> AppError {
        match err {
            CoreError::TrainingDiverged { .. } => AppError::Training(err.to_string()),
            CoreError::InvalidArgument(_) => AppError::Config(err.to_string()),
            other => AppError::Data(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_match_error_classes() {
        assert_eq!(AppError::config("x").exit_code(), 2);
        assert_eq!(AppError::data("x").exit_code(), 3);
        assert_eq!(AppError::Training("x".into()).exit_code(), 4);
    }

    #[test]
    fn core_divergence_maps_to_training_class() {
        let err: AppError = CoreError::TrainingDiverged { epoch: 300 }.into();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("300"));
    }
}
