use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field element `{0}`")]
    InvalidFieldElement(String),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("constraint system is frozen")]
    FrozenSystem,
    #[error("gate `{gate}` has degree {degree}, maximum is {max}")]
    DegreeTooHigh { gate: String, degree: usize, max: usize },
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("rotation {0} outside [-1, 1]")]
    InvalidRotation(i32),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("witness infeasible: {0}")]
    WitnessInfeasible(String),
    #[error("empty group in division")]
    DivisionByZeroGroup,
    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("step `{step}` needs {rows} rows but its budget is {budget}")]
    BudgetExceeded { step: String, rows: usize, budget: usize },
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("commitment mismatch: {0}")]
    CommitmentMismatch(String),
    #[error("constraint failure: {0}")]
    ConstraintFailure(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for this error class. Usage errors exit with 2
    /// (reported by the argument parser) and success with 0.
    ///
    /// | code | class |
    /// |------|-------|
    /// | 1 | internal inconsistency |
    /// | 3 | query parse, unsupported feature, schema |
    /// | 4 | row budget exceeded |
    /// | 5 | input data, I/O, CSV, JSON |
    /// | 6 | witness infeasible, out of range, field errors |
    /// | 10 | commitment mismatch |
    /// | 11 | shape mismatch |
    /// | 12 | constraint failure |
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InternalInconsistency(_) | Error::FrozenSystem | Error::DegreeTooHigh { .. } => 1,
            Error::UnknownColumn(_) | Error::InvalidRotation(_) => 1,
            Error::Parse { .. } | Error::UnsupportedFeature(_) | Error::Schema(_) => 3,
            Error::BudgetExceeded { .. } => 4,
            Error::InvalidData(_) | Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 5,
            Error::WitnessInfeasible(_) | Error::DivisionByZeroGroup | Error::OutOfRange(_) => 6,
            Error::InvalidFieldElement(_) | Error::ZeroInverse => 6,
            Error::CommitmentMismatch(_) => 10,
            Error::ShapeMismatch(_) => 11,
            Error::ConstraintFailure(_) => 12,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
