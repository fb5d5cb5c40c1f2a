use thiserror::Error;

/// One offending key found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration parse error: {0}")]
    ConfigParse(String),

    #[error("configuration rejected: {}", format_violations(.0))]
    ConfigInvalid(Vec<Violation>),

    #[error("integration diverged at step {step} (t = {t}): non-finite {entity}")]
    Diverged { step: usize, t: f64, entity: String },

    #[error("step rejected: dt = {dt} violates the stability bound, use dt <= {suggested_dt}")]
    StepRejected { dt: f64, suggested_dt: f64 },

    #[error("acceptance failure: {0}")]
    Acceptance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::ConfigParse(_) | Error::ConfigInvalid(_) => 2,
            Error::Diverged { .. } | Error::StepRejected { .. } => 3,
            Error::Acceptance(_) => 4,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }

    /// Stable snake-case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::ConfigParse(_) => "config_parse",
            Error::ConfigInvalid(_) => "config_invalid",
            Error::Diverged { .. } => "diverged",
            Error::StepRejected { .. } => "step_rejected",
            Error::Acceptance(_) => "acceptance",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            Error::ConfigInvalid(v) => v,
            _ => &[],
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
