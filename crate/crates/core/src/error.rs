use num_complex::Complex64;
use thiserror::Error;

/// Failure modes shared across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("branch-point collision near z = {z}")]
    BranchPointCollision { z: Complex64 },
    #[error("path lifting did not converge near z = {z}")]
    LiftNotConverged { z: Complex64 },
    #[error("near-pole evaluation of {form} at z = {z} (marked point {marked})")]
    NearPole { form: &'static str, z: Complex64, marked: Complex64 },
    #[error("non-convergent quadrature (estimate {estimate:e}, error {error:e})")]
    NonConvergent { estimate: f64, error: f64 },
    #[error("degenerate V: zeros collapse because b = 0")]
    DegenerateZeros,
    #[error("no sign change: {0}")]
    NoSignChange(String),
    #[error("period problem unsolved at this resolution")]
    Unsolved,
    #[error("period residual too large to assemble (weld mismatch {mismatch:e})")]
    WeldMismatch { mismatch: f64 },
    #[error("gauss map required for {0}")]
    MissingGaussMap(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
