use g2flow::G2Error;
use thiserror::Error;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Pass = 0,
    IdentityFailure = 1,
    PositivityLoss = 2,
    Blowup = 3,
    BadConfig = 64,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] G2Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::BadConfig,
            CliError::Io { .. } | CliError::Csv(_) => ExitCode::BadConfig,
            CliError::Core(e) => match e {
                G2Error::NonPositiveForm(_) | G2Error::DegenerateMetric(_) | G2Error::NonPositiveChi(_) => {
                    ExitCode::PositivityLoss
                }
                G2Error::NumericalBlowup(_) => ExitCode::Blowup,
                G2Error::Config(_) | G2Error::Shape(_) => ExitCode::BadConfig,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
