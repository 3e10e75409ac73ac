//! Spectral statistics and Monte Carlo estimators.

pub mod correlation;
pub mod moments;
pub mod spectral;

pub use correlation::{kpoint_estimate, CorrelationEstimate, PolarGrid};
pub use moments::{
    clt_samples, correlation, gaussian_moment, gaussian_moment_test, mean, outlier_count_moments, variance,
    CltSampleSet, MomentAccumulator, MomentEstimate, MomentTest,
};
pub use spectral::{
    circular_law_distance, esd_histogram, interlacing_check, ks_distance, least_singular_diagnostic,
    power_norm_ratio, spectral_radius, EsdHistogram, InterlacingReport,
};
