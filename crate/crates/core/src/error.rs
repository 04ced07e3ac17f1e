use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation defect {defect:.3e} exceeds tolerance {tolerance:.3e}; raise the cutoff")]
    Truncation { defect: f64, tolerance: f64 },

    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("series did not converge: {0}")]
    SeriesNonConvergence(String),

    #[error("outside validity regime: {0}")]
    Regime(String),

    #[error("undefined angle: zero resultant")]
    ZeroResultant,
}

impl Error {
    /// Numerical failures map to exit code 2 in the CLI, everything else to 1.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. }
                | Error::Quadrature(_)
                | Error::SeriesNonConvergence(_)
                | Error::ZeroResultant
        )
    }
}
