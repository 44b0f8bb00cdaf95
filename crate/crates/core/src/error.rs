use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e} vs scale {scale:.3e})")]
    NotSymmetric { asymmetry: f64, scale: f64 },
    #[error("matrix is indefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    IndefiniteMatrix { min_eigenvalue: f64 },
    #[error("matrix is singular or numerically not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    SingularMatrix { min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation requires a VAR order p >= 1")]
    OrderZero,
    #[error("VAR coefficients are not stable (spectral radius {spectral_radius:.6})")]
    UnstableModel { spectral_radius: f64 },
    #[error("break date {0} outside [0, 1]")]
    InvalidBreakDate(f64),
    #[error("variance {0} is not positive")]
    NonPositiveVariance(f64),
    #[error("volatility matrix not positive definite at r = {r}")]
    NotPositiveDefinite { r: f64 },
    #[error("kernel weights vanish at t = {t} (T = {len}, bandwidth = {bandwidth})")]
    DegenerateKernel { t: usize, len: usize, bandwidth: f64 },
    #[error("bandwidth grid is empty")]
    EmptyGrid,
    #[error("design matrix is singular or ill conditioned (condition number {condition:.3e})")]
    SingularDesign { condition: f64 },
    #[error("lag {m} too large for a series of length {len}")]
    LagTooLarge { m: usize, len: usize },
    #[error("eigenvalue {value:.6} of the standardized residual covariance outside [0, 1]")]
    EigenvalueOutOfRange { value: f64 },
    #[error("lag-zero autocovariance is singular")]
    SingularGamma0,
    #[error("numerical procedure did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("alternative AR matrix is not stable (spectral radius {spectral_radius:.6})")]
    UnstableAlternative { spectral_radius: f64 },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors caused by malformed input rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::InvalidBreakDate(_)
                | Error::NonPositiveVariance(_)
                | Error::LagTooLarge { .. }
                | Error::EmptyGrid
                | Error::OrderZero
                | Error::MissingInput(_)
                | Error::InvalidArgument(_)
        )
    }
}
