use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] vpatch_core::Error),

    /// A check run by the CLI itself failed.
    #[error("invariant violated ({name}): {detail}")]
    Check { name: &'static str, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for bad input, 2 for numerical or invariant failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Core(e) if e.is_config_error() => 1,
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
        assert_eq!(CliError::Core(vpatch_core::Error::invalid("x")).exit_code(), 1);
        assert_eq!(CliError::Core(vpatch_core::Error::invariant("oddness", "x")).exit_code(), 2);
        assert_eq!(CliError::Core(vpatch_core::Error::StepFailure("x".into())).exit_code(), 2);
        let e = CliError::Check { name: "mean", detail: "drift".into() };
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("mean"));
    }
}
