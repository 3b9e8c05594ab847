use std::path::PathBuf;

/// Errors surfaced by the simulation, file and command-line layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] fastlevy_core::Error),
    #[error("simulation needs {required} path-steps, above the budget of {budget}")]
    Budget { required: u64, budget: u64 },
    #[error("non-finite path (seed {seed}, path {path}, step {step})")]
    NonFinitePath { seed: u64, path: u64, step: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {message}")]
    Parse { context: String, message: String },
    #[error("invalid input: {0}")]
    Input(String),
}

impl Error {
    /// Process exit code: 2 input, 3 numeric, 4 budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } => 4,
            Error::Io { .. } | Error::Parse { .. } | Error::Input(_) => 2,
            Error::Core(fastlevy_core::Error::Domain(_) | fastlevy_core::Error::Inadmissible(_)) => 2,
            Error::Core(_) | Error::NonFinitePath { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
