use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("polynomial degree {degree} exceeds the supported maximum of {max}")]
    DegreeCap { degree: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero polynomial has no isolated roots")]
    ZeroPolynomial,

    #[error("expected effective degree {expected}, found {found:?}")]
    WrongDegree { expected: usize, found: Option<usize> },

    #[error("program is infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure in conic solver: {0}")]
    NumericalFailure(String),

    #[error("operating point out of range: {0}")]
    OutOfRange(String),

    #[error("fit of speed slice {index} failed: {source}")]
    SliceFitFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("torque demand cannot be met: {0}")]
    InfeasibleDemand(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
