use qrefl::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{failed} of {total} sweep rows failed")]
    Partial { failed: usize, total: usize },
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

impl HarnessError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) => match e {
                CoreError::InvalidArgument(_) | CoreError::Domain(_) => EXIT_INVALID,
                _ => EXIT_NUMERICAL,
            },
            HarnessError::Config(_) | HarnessError::Io { .. } => EXIT_INVALID,
            HarnessError::Partial { .. } => EXIT_PARTIAL,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::Config("x".into()).exit_code(), 1);
        assert_eq!(HarnessError::from(CoreError::InvalidArgument("x".into())).exit_code(), 1);
        assert_eq!(HarnessError::from(CoreError::NumericalBlowup { step: 3 }).exit_code(), 2);
        assert_eq!(HarnessError::from(CoreError::NotConverged("x".into())).exit_code(), 2);
        assert_eq!(HarnessError::Partial { failed: 1, total: 4 }.exit_code(), 3);
    }
}
