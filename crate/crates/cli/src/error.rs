use std::fmt;

/// Exit 2 for usage errors, 1 for everything that went wrong at run time.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Runtime(s) => write!(f, "error: {s}"),
        }
    }
}

impl From<qvlab::Error> for CliError {
    fn from(e: qvlab::Error) -> Self {
        use qvlab::Error::*;
        match e {
            Spec { .. }
            | Parameter(_)
            | Precondition(_)
            | DimensionMismatch(_)
            | NotHarmonic { .. }
            | Boundary(_)
            | BentWeight(_)
            | StepSize(_) => CliError::Usage(e.to_string()),
            ZeroMass { .. } | AmbiguousContinuation { .. } => CliError::Runtime(e.to_string()),
        }
    }
}
