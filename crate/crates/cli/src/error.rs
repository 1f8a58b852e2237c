use specgeo::SpecError;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags or inputs; exit 1.
    Usage(String),
    /// Computed, but a tolerance or contract check failed; exit 2.
    Violation(String),
    /// Reading inputs or writing the artifact failed; exit 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Violation(_) => 2,
        }
    }

    pub fn usage(flag: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("{flag}: {msg}"))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Violation(m) => write!(f, "check failed: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

/// Errors that trace back to an argument value become usage errors naming
/// `flag`; numerical failures are contract violations.
pub fn at_flag(flag: &str, e: SpecError) -> CliError {
    match e {
        SpecError::InvalidArgument(_) | SpecError::OutOfRange { .. } | SpecError::Mismatch(_) | SpecError::Rational(_) => {
            CliError::usage(flag, e)
        }
        SpecError::TailBound { .. } | SpecError::Quadrature(_) | SpecError::Homogeneity { .. } => {
            CliError::Violation(e.to_string())
        }
    }
}

pub trait FlagContext<T> {
    fn flag(self, flag: &str) -> Result<T, CliError>;
}

impl<T> FlagContext<T> for specgeo::Result<T> {
    fn flag(self, flag: &str) -> Result<T, CliError> {
        self.map_err(|e| at_flag(flag, e))
    }
}
