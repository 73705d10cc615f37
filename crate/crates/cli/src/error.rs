use thiserror::Error;
use vicsek_core::VicsekError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: cannot read {path}: {source}")]
    ConfigRead {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Syntax errors, unknown keys and type mismatches reported by the TOML parser.
    #[error("config: {0}")]
    ConfigSyntax(String),

    /// A value that parses but violates the schema; `key` is the dotted key path.
    #[error("config: {key}: {message}")]
    Schema { key: String, message: String },

    #[error("output: {0}")]
    Io(#[from] std::io::Error),

    #[error("output: {0}")]
    Csv(#[from] csv::Error),

    #[error("output: cannot serialize manifest: {0}")]
    Manifest(#[from] toml::ser::Error),

    #[error("{module}: {source}")]
    Core {
        module: &'static str,
        #[source]
        source: VicsekError,
    },

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn schema(key: &str, message: impl Into<String>) -> Self {
        Self::Schema {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit status: 3 for failed invariant checks, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}

/// Tags core errors with the module that raised them.
pub trait InModule<T> {
    fn in_module(self, module: &'static str) -> Result<T, CliError>;
}

impl<T> InModule<T> for Result<T, VicsekError> {
    fn in_module(self, module: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { module, source })
    }
}
