use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid index pair <{i},{j}> for dimension {n}")]
    InvalidIndices { i: usize, j: usize, n: usize },

    #[error("dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: entry ({row},{col}) deviates by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("matrix is not traceless: |Tr| = {0:e}")]
    NotTraceless(f64),

    #[error("matrix is not unitary: ||U*U - I||_F = {0:e}")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("validation failed: {hypothesis}: {detail}")]
    Validation { hypothesis: &'static str, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid control field: {0}")]
    InvalidField(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("system is not controllable (Lie closure dimension {dimension}, need {needed})")]
    NotControllable { dimension: usize, needed: usize },

    #[error("no separating permutation found after {attempts} attempts")]
    NoWitness { attempts: usize },

    #[error("postcondition violated: {0}")]
    Postcondition(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
