use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Inputs fall outside the small-amplitude / long-edge regime where the
    /// single-bump construction is well defined.
    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
