use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A canonical pair of the two subspaces coincides, so the difference
    /// vector has no direction.
    #[error("degenerate canonical pair {index} (cosine {cosine}): subspaces overlap")]
    DegeneratePair { index: usize, cosine: f64 },

    #[error("no difference component: the two subspaces coincide")]
    DegenerateDifference,

    /// Eigenvalue of P1 + P2 too close to 1 to assign to either the
    /// difference or the principal component side.
    #[error("ambiguous eigenvalue {eigenvalue} of P1 + P2: found {found} of {expected} difference directions")]
    AmbiguousEigenvalue { eigenvalue: f64, found: usize, expected: usize },

    #[error("class subspaces overlap: sum matrix has rank {rank}, expected {expected}")]
    Overlap { rank: usize, expected: usize },

    #[error("undefined direction: {0}")]
    UndefinedDirection(String),

    #[error("within-class scatter is singular (rank {rank} of {order})")]
    SingularWithin { rank: usize, order: usize },

    #[error("method not applicable: {0}")]
    NotApplicable(String),

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
