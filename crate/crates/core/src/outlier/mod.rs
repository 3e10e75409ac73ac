//! Outlier eigenvalues of `X/sqrt(n) + A B` as zeros of a `k x k` determinant,
//! located with the argument principle.

pub mod contour;
pub mod detect;
pub mod weinstein;
pub mod zeros;

pub use contour::{winding_number, Contour, Segment, WindingOptions};
pub use detect::{
    detect_outliers, guard_exponent, jensen_integrand, jensen_log_integral, outlier_eigenvector, spectral_radius_guard,
    DetectOptions, OutlierReport,
};
pub use weinstein::{
    char_poly_ratio_oracle, comparator_rational, weinstein_det, Backend, DirectEvaluator, Evaluator,
    HessenbergEvaluator, NeumannEvaluator, NeumannOptions,
};
pub use zeros::{locate_zeros, search_zeros, AnnulusRegion, LocatedZero, Region, ZeroOptions, ZeroSearch};

pub use crate::matching::{match_points as match_outliers, MatchOutcome};
