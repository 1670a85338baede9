use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{0}")]
    Config(aos_core::Error),

    #[error("{0}")]
    Run(aos_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{failed} of {total} runs failed")]
    Failures { failed: usize, total: usize },
}

impl AppError {
    /// 0 success, 1 run failure, 2 usage or configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Run(_) | AppError::Failures { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Sorts core errors into configuration problems and run failures.
impl From<aos_core::Error> for AppError {
    fn from(e: aos_core::Error) -> Self {
        use aos_core::Error as E;
        match e {
            E::InvalidConfig { .. }
            | E::UnknownPreset { .. }
            | E::UnsupportedFunction { .. }
            | E::PopulationTooSmall { .. }
            | E::BudgetTooSmall { .. }
            | E::RaceBudget { .. }
            | E::TooFewCandidates(_)
            | E::UnknownParameter(_)
            | E::EmptyInput(_) => AppError::Config(e),
            _ => AppError::Run(e),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
