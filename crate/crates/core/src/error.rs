use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid rank: requested {rank} exceeds dimension {n}")]
    InvalidRank { rank: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("resolvent is singular at z = {z}")]
    ResolventSingular { z: Complex64 },
    #[error("oracle denominator is singular at z = {z}")]
    OracleSingular { z: Complex64 },
    #[error("pole at z = 0")]
    Pole,
    #[error("eigenvalue iteration did not converge after {sweeps} sweeps ({} eigenvalues deflated)", found.len())]
    Convergence { sweeps: usize, found: Vec<Complex64> },
    #[error("contour passes through or near a zero at z = {z} (|f| = {modulus:e})")]
    ContourThroughZero { z: Complex64, modulus: f64 },
    #[error("contour refinement limit reached near z = {z}")]
    RefinementExhausted { z: Complex64 },
    #[error("could not find a clean contour after {retries} retries")]
    UnresolvableContour { retries: usize },
    #[error("|z| = {modulus} lies inside the uncertified disk of radius {r_min}")]
    OutsideCertifiedRegion { modulus: f64, r_min: f64 },
    #[error("point {0} is not inside the open unit disk")]
    OutsideDisk(Complex64),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
