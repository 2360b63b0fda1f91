use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mode set is not a subset of the field cutoff")]
    NotSubset,
    #[error("mode set is not symmetric under k -> -k")]
    NotSymmetric,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("level {level} out of range (top cutoff {max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("grid resolution {grid} is not divisible by partition resolution {partition}")]
    ResolutionMismatch { grid: usize, partition: usize },
    #[error("rank-deficient regression design (degree {degree})")]
    RankDeficient { degree: usize },
    #[error(
        "effective sample size {ess:.1} is below the threshold {threshold}; \
         reduce the coupling or step size, or raise the sample count"
    )]
    LowEss { ess: f64, threshold: f64 },
    #[error("malformed ensemble data: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Errors that signal a violated numerical contract rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::RankDeficient { .. } | Error::LowEss { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
