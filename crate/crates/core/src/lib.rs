//! Numerical laboratory for outlier eigenvalues of iid random matrices under
//! bounded-rank perturbations.
//!
//! * [`ensembles`]: seeded iid matrices and structured perturbations.
//! * [`linalg`]: self-contained dense complex linear algebra.
//! * [`outlier`]: the `k x k` determinant criterion, contour zero counting and
//!   outlier location.
//! * [`laurent`]: truncated random Laurent and power series.
//! * [`stats`]: spectral statistics and Monte Carlo checks.

pub mod ensembles;
pub mod error;
pub mod laurent;
pub mod linalg;
pub mod matching;
pub mod outlier;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, C64};
