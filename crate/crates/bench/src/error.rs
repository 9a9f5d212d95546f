use thiserror::Error;

/// Failures of an experiment run, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(mismc::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl From<mismc::Error> for BenchError {
    fn from(e: mismc::Error) -> Self {
        match e {
            mismc::Error::Io(source) => BenchError::Io {
                context: "model data".into(),
                source,
            },
            e if e.is_numerical() => BenchError::Numerical(e),
            // bad inputs reaching the library are configuration problems
            e => BenchError::Config(e.to_string()),
        }
    }
}

impl BenchError {
    pub fn config(msg: impl Into<String>) -> Self {
        BenchError::Config(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        BenchError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for numerical aborts.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Numerical(_) => 3,
            BenchError::Io { .. } | BenchError::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
