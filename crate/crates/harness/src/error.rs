use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One configuration problem, located by its dotted key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl Violation {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Malformed document, unknown key, duplicate key or wrong value type.
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("invalid configuration:{}", list(.0))]
    Invalid(Vec<Violation>),
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            ConfigError::Syntax(_) => &[],
        }
    }

    pub(crate) fn single(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid(vec![Violation::new(key, message)])
    }
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("\n  {x}")).collect()
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run diverged at sample {step}: {reason}")]
    Divergence { step: u64, reason: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: anc_core::Error,
    },
    #[error("runs are not comparable: {0}")]
    Comparability(String),
    #[error("malformed log: {0}")]
    Log(String),
}

impl HarnessError {
    pub(crate) fn core(context: impl Into<String>, source: anc_core::Error) -> Self {
        match source {
            anc_core::Error::Divergence { step, reason, .. } => HarnessError::Divergence { step, reason },
            source => HarnessError::Core {
                context: context.into(),
                source,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 configuration, 2 divergence, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Divergence { .. } => 2,
            HarnessError::Core {
                source: anc_core::Error::Identification { .. },
                ..
            } => 2,
            HarnessError::Io { .. } | HarnessError::Log(_) => 3,
            HarnessError::Config(_) | HarnessError::Core { .. } | HarnessError::Comparability(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
