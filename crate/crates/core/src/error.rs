use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} is not a multiple of the time step {step}")]
    OffLattice { what: String, value: f64, step: f64 },

    #[error("negative density value {value} at frequency {freq}")]
    NegativeDensity { freq: f64, value: f64 },

    #[error("density is not even: value {left} at -{freq} differs from {right} at {freq}")]
    NotEven { freq: f64, left: f64, right: f64 },

    #[error("denominator of rational density vanishes inside the band near lambda = {0}")]
    DenominatorRoot(f64),

    #[error("node {0} is outside the represented time window")]
    OutsideWindow(i64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("matrix is numerically singular: {0}")]
    Singular(String),

    #[error("fixed-point iteration diverged: {0}")]
    Diverged(String),

    #[error("constraint infeasible: {0}")]
    Infeasible(String),

    #[error("empty input: {0}")]
    Empty(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Numerical failures map to a distinct CLI exit status.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::Diverged(_) | Error::Infeasible(_)
        )
    }
}
