use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("pole at {0}")]
    Pole(String),
    #[error("eigenvalues could not be paired (gap {0:e})")]
    EigenPairing(f64),
    #[error("degenerate spectrum: eigenangle at 0, log Λ(1) floored at {floor}")]
    DegenerateSpectrum { floor: f64 },
    #[error("evaluation point within {0:e} of an eigenvalue")]
    NearEigenvalue(f64),
    #[error("|alpha - gamma| = {0:e} below the guard; use the α=γ predictor")]
    Guard(f64),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("zero on continuation path at index {0}")]
    ZeroOnPath(usize),
    #[error("square-root branch does not close (residual {0:e})")]
    BranchNotClosed(f64),
    #[error("only {accepted} samples accepted (need at least {needed})")]
    TooFewAccepted { accepted: usize, needed: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Exit-code class used by the CLI: 3 numerical, 4 data, 2 usage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::EmptyDataset | Error::Io(_) => 4,
            Error::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
