use std::fmt;

/// Failure of a command, with a stable code and a process exit status.
#[derive(Debug)]
pub enum CliError {
    Core(lagvac_core::Error),
    /// Configuration problems found by the front end (parsing, overrides).
    Config {
        code: &'static str,
        message: String,
    },
    /// Missing, unreadable or corrupt artifacts.
    Io {
        code: &'static str,
        message: String,
    },
}

pub type CliResult<T> = Result<T, CliError>;

/// Exit status when a run completes but a monitor fails.
pub const EXIT_MONITOR: i32 = 1;

impl CliError {
    pub fn config(code: &'static str, message: impl Into<String>) -> Self {
        CliError::Config { code, message: message.into() }
    }

    pub fn io(code: &'static str, message: impl Into<String>) -> Self {
        CliError::Io { code, message: message.into() }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Config { code, .. } | CliError::Io { code, .. } => code,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use lagvac_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 5,
            CliError::Core(e) => match e {
                E::Config(_) | E::Domain(_) | E::Range { .. } | E::Shape { .. } => 2,
                E::Degeneracy { .. } => 3,
                E::NonConvergence { .. } | E::Continuation { .. } => 4,
                E::Numerical(_) => 6,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config { message, .. } => write!(f, "configuration error: {message}"),
            CliError::Io { message, .. } => write!(f, "io error: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lagvac_core::Error> for CliError {
    fn from(e: lagvac_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io("io", e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::io("io.csv", e.to_string())
    }
}
