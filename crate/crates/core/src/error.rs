use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("adjacency matrix is empty")]
    Empty,
    #[error("adjacency matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("adjacency entry ({i}, {j}) = {value} is not 0 or 1")]
    NotBinary { i: usize, j: usize, value: i64 },
    #[error("adjacency is not symmetric at ({i}, {j})")]
    NonSymmetric { i: usize, j: usize },
    #[error("agent {0} has a self-loop")]
    SelfLoop(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("noise covariance is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    CholeskyFailure { min_eigenvalue: f64 },
    #[error("non-finite estimate produced at step {step}")]
    NonFinite { step: usize },
    #[error("no step t <= {t_max} satisfies the spectral condition")]
    NotFound { t_max: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("drift matrix is not Hurwitz (largest eigenvalue {max_eigenvalue:e})")]
    NotHurwitz { max_eigenvalue: f64 },
    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("trace has no centralized baseline")]
    MissingBaseline,
    #[error("could not parse config: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Empty => "Empty",
            Error::NotSquare { .. } => "NotSquare",
            Error::NotBinary { .. } => "NotBinary",
            Error::NonSymmetric { .. } => "NonSymmetric",
            Error::SelfLoop(_) => "SelfLoop",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::Numerical(_) => "Numerical",
            Error::CholeskyFailure { .. } => "CholeskyFailure",
            Error::NonFinite { .. } => "NonFinite",
            Error::NotFound { .. } => "NotFound",
            Error::DomainError(_) => "DomainError",
            Error::NotHurwitz { .. } => "NotHurwitz",
            Error::SingularSystem(_) => "SingularSystem",
            Error::MissingBaseline => "MissingBaseline",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
