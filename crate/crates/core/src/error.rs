use alloc::string::String;

use crate::picard::IterationTrace;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// Flow map folding, nonpositive Jacobian, or a background leaving its
    /// admissible interval.
    #[error("degenerate flow at t = {t}: {what}")]
    Degeneracy { t: f64, what: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("picard iteration did not converge after {} iterations", .trace.iterations)]
    NonConvergence { trace: IterationTrace },

    #[error("continuation stopped at t = {last_good_time}: {reason}")]
    Continuation { last_good_time: f64, reason: String },

    #[error("value {value} outside [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },
}

impl Error {
    /// Stable machine-readable code, used for process exit statuses and
    /// run manifests.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(msg) if msg.starts_with("beta outside") => "config.beta",
            Error::Config(msg) if msg.starts_with("gamma outside") => "config.gamma",
            Error::Config(_) => "config",
            Error::Domain(_) => "domain",
            Error::Shape { .. } => "shape",
            Error::Degeneracy { .. } => "degeneracy",
            Error::Numerical(_) => "numerical",
            Error::NonConvergence { .. } => "nonconvergence",
            Error::Continuation { .. } => "continuation",
            Error::Range { .. } => "range",
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degeneracy(t: f64, what: impl Into<String>) -> Self {
        Error::Degeneracy { t, what: what.into() }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
