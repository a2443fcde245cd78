use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {re} + {im}i is not in the upper half-plane")]
    NotInHalfPlane { re: f64, im: f64 },

    #[error("matrix determinant {det} is too far from 1 (numeric decay)")]
    MatrixDecay { det: f64 },

    #[error("ambiguous wall test while normalizing a word (displacement too large for double precision)")]
    AmbiguousNormalForm,

    #[error("genus must be at least 2, got {0}")]
    InvalidGenus(usize),

    #[error("group validation failed: {0}")]
    InvalidGroup(String),

    #[error("letter {letter} is not valid for a group with {generators} generators")]
    InvalidLetter { letter: String, generators: usize },

    #[error("failed to parse word {0:?}")]
    WordParse(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid period form: {0}")]
    InvalidPeriodForm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("margin {margin} is below the covering margin {required}")]
    InsufficientMargin { margin: f64, required: f64 },

    #[error("element budget exceeded: projected {projected} elements, cap {cap}")]
    BudgetExceeded { projected: f64, cap: usize },

    #[error("stopping audit failed: {0}")]
    StoppingAudit(String),

    #[error("too few positive-distance records: need {needed}, have {have}")]
    TooFewRecords { needed: usize, have: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),

    #[error("malformed orbit dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
