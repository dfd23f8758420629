use std::path::PathBuf;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    Domain { name: &'static str, value: f64 },

    #[error("arm with mean {mu_a} is not suboptimal against best mean {mu_star}")]
    NotSuboptimal { mu_a: f64, mu_star: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid schedule `{input}`: {reason}")]
    InvalidSchedule { input: String, reason: String },

    #[error("invalid policy `{input}`: {reason}")]
    InvalidPolicy { input: String, reason: String },

    #[error("invalid run configuration: {0}")]
    InvalidRun(String),

    #[error("arm set is empty")]
    EmptyArmSet,

    #[error("checkpoint {0} was not recorded")]
    UnknownCheckpoint(u64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{} configuration error(s):\n{}", .0.len(), format_config_errors(.0))]
    Config(Vec<ConfigError>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn format_config_errors(errors: &[ConfigError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than the environment.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv { .. })
    }
}
