use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum TarmaError {
    /// Model or noise specification violates an invariant (non-finite
    /// parameter, |theta| >= 1, sigma <= 0, ...).
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A classification or operation is only defined for a constrained
    /// sub-family of specifications.
    #[error("unsupported specification: {0}")]
    UnsupportedSpec(String),

    /// Input series is shorter than the operation requires.
    #[error("series too short: {got} observations, need at least {need}")]
    TooShort { got: usize, need: usize },

    /// Degenerate input (e.g. zero variance of the first differences).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// No admissible threshold survived the grid exclusions.
    #[error("untestable series: {0}")]
    UntestableSeries(String),

    /// A quantile table lookup failed.
    #[error("missing null-table entry: {0}")]
    MissingTable(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A persisted table violates one of its invariants.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Internal inconsistency; indicates a bug, not a user error.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, TarmaError>;
