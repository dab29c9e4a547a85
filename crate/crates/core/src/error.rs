use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A drift was evaluated on its singular locus.
    #[error("evaluation on the singular locus of {field} at t={t}, |x|={norm}")]
    SingularLocus {
        field: &'static str,
        t: f64,
        norm: f64,
    },

    /// Evaluation time outside the field's time domain.
    #[error("time {t} outside the domain of {field}")]
    TimeDomain { field: &'static str, t: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The hypothesis of a check is violated, so running it would be vacuous.
    #[error("check refused: {0}")]
    Refused(String),

    #[error("configuration errors:\n{}", format_issues(.0))]
    Config(Vec<crate::harness::config::ConfigIssue>),

    #[error("malformed trajectory file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_issues(issues: &[crate::harness::config::ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
