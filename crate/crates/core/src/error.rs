use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Law parameters for which the criticality solve produces a negative probability.
    #[error("infeasible parameters: {what} = {value:e}")]
    InfeasibleParameters { what: &'static str, value: f64 },

    /// A law that fails the mass / mean / non-degeneracy audit; lists every
    /// violated check with its measured deviation.
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("invalid excursion: first offending index {index}")]
    InvalidExcursion { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("budget exceeded after {spent} units (cap {cap})")]
    BudgetExceeded { spent: u64, cap: u64 },

    /// Mass that escaped the value band of an exact dynamic program.
    #[error("value band overflow: escaped mass {escaped:e}")]
    BandOverflow { escaped: f64 },

    #[error("sample too small: {got} < {min}")]
    SampleTooSmall { got: usize, min: usize },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error under the CLI contract
    /// (2 validation, 3 oracle/test failure, 4 budget exceeded).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } => 4,
            Error::Inconsistent(_) | Error::BandOverflow { .. } => 3,
            Error::Replicate { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
