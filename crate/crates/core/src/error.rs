use thiserror::Error;

/// Errors raised by the estimator and its supporting analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },

    /// A subset enumeration would visit more subsets than allowed.
    #[error("subset enumeration of {count} subsets exceeds cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },

    #[error("singular Gram matrix over sensors {sensors:?}; the model is not sparse observable at the required level")]
    SingularGram { sensors: Vec<usize> },

    #[error("matrix is not symmetric positive (semi)definite: {0}")]
    NotDefinite(String),

    #[error("empty sensor set")]
    EmptySensorSet,

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The conflict walk exhausted every candidate without producing an UNSAT set.
    #[error("no conflicting set found among {candidates} candidates")]
    NoConflictFound { candidates: usize },

    #[error("iteration cap of {0} reached")]
    IterationCap(u64),

    #[error("instance generation failed after {0} attempts")]
    GenerationFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
