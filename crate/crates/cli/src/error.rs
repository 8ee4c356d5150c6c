use qoeshift_core::eval::EvalError;
use qoeshift_core::ingest::IngestError;
use qoeshift_core::learners::LearnError;
use qoeshift_core::persist::PersistError;
use qoeshift_core::stats::StatsError;

/// Exit code for bad invocations and unreadable or malformed inputs.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for well-formed inputs on which the analysis is undefined.
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Usage(format!("{}: {err}", path.display()))
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::EmptyDataset => {
                CliError::Domain(format!("empty alignment: {e}"))
            }
            IngestError::MissingSessionDate { .. } => {
                CliError::Usage(format!("{e} (pass --session-date YYYY-MM-DD or set session_date in the config)"))
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::ZeroVariance(_) | StatsError::TooFew(_) => {
                CliError::Domain(format!("correlation undefined: {e}"))
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::InvalidConfig(_) | LearnError::NonFinite { .. } | LearnError::LengthMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidFolds(_) | EvalError::InvalidFraction(_) => CliError::Usage(e.to_string()),
            EvalError::Fold { source: LearnError::InvalidConfig(_), .. }
            | EvalError::Learn(LearnError::InvalidConfig(_)) => CliError::Usage(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        CliError::Usage(e.to_string())
    }
}
