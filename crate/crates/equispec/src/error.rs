use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The caller asked for something malformed or unsupported.
    Input,
    /// A computation did not converge or failed certification.
    Numerical,
    /// Reading or writing data failed.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-finite potential sample at node {index}")]
    NonFinitePotential { index: usize },
    #[error("grid node {index} (x = {x}) touches the singular point of the potential")]
    Singularity { index: usize, x: f64 },
    #[error("eigenpair {index} did not converge within {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },
    #[error("step size underflow; last good xi = {last_x}")]
    StepUnderflow { last_x: f64 },
    #[error("non-finite derivative at xi = {x}")]
    NonFiniteDerivative { x: f64 },
    #[error("branch infeasible at anchor: radicand {radicand} < 0")]
    BranchInfeasible { radicand: f64 },
    #[error("residual {worst:e} at xi = {x} exceeds tolerance {tol:e}")]
    ResidualTooLarge { worst: f64, x: f64, tol: f64 },
    #[error("polynomial degree certification failed: {0}")]
    DegreeCertification(String),
    #[error("singular design matrix: {0}")]
    SingularDesign(String),
    #[error("line {line}: {message}")]
    Dataset { line: usize, message: String },
    #[error("no records")]
    NoRecords,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::Unsupported(_)
            | Error::Singularity { .. }
            | Error::BranchInfeasible { .. }
            | Error::Dataset { .. }
            | Error::NoRecords => ErrorKind::Input,
            Error::NonFinitePotential { .. }
            | Error::NoConvergence { .. }
            | Error::StepUnderflow { .. }
            | Error::NonFiniteDerivative { .. }
            | Error::ResidualTooLarge { .. }
            | Error::DegreeCertification(_)
            | Error::SingularDesign(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
            Error::Csv(e) => {
                if e.is_io_error() {
                    ErrorKind::Io
                } else {
                    ErrorKind::Input
                }
            }
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
