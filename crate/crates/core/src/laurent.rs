//! Truncated random Laurent series `g(z) = 1 - mu sum_{j>=1} g_j z^{-j}` and
//! Gaussian power series.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::{determinant, ComplexMatrix, C64, ONE, ZERO};
use crate::outlier::{search_zeros, winding_number, AnnulusRegion, Contour, LocatedZero, Region, WindingOptions, ZeroOptions, ZeroSearch};
use crate::rng::{SeedPolicy, SplitMix64, StreamTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Standard Gaussian in the field, with `E|g|^2 = 1`.
    pub fn gaussian(self, rng: &mut SplitMix64) -> C64 {
        match self {
            Field::Real => C64::new(StandardNormal.sample(rng), 0.0),
            Field::Complex => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(s * re, s * im)
            }
        }
    }
}

/// Truncation order `J` such that, on `|z| >= r_min`, the neglected Gaussian tail
/// has standard deviation `mu r_min^{-J} / sqrt(r_min^2 - 1)` small enough
/// that it exceeds `tail_tol` with probability at most `fail_prob`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub r_min: f64,
    pub tail_tol: f64,
    pub fail_prob: f64,
    pub certified_order: usize,
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-6;
pub const DEFAULT_FAIL_PROB: f64 = 1e-9;

/// Standard deviation of `mu sum_{j>order} g_j z^{-j}` at `|z| = r`.
pub fn tail_sigma(mu: f64, r: f64, order: usize) -> f64 {
    mu * r.powf(-(order as f64)) / (r * r - 1.0).sqrt()
}

pub fn choose_truncation(r_min: f64, tail_tol: f64, fail_prob: f64, mu: f64) -> Result<TruncationPolicy> {
    if !(r_min > 1.0) {
        return Err(Error::InvalidParameter(format!("series diverges on |z| = {r_min}: need r_min > 1")));
    }
    if !(tail_tol > 0.0) || !(0.0 < fail_prob && fail_prob < 1.0) || !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need tail_tol > 0, fail_prob in (0, 1), mu > 0; got {tail_tol}, {fail_prob}, {mu}"
        )));
    }
    let quantile = Normal::standard().inverse_cdf(1.0 - fail_prob / 2.0);
    let need = (mu * quantile / (tail_tol * (r_min * r_min - 1.0).sqrt())).ln() / r_min.ln();
    let mut order = if need.is_finite() { need.ceil().max(1.0) as usize } else { 1 };
    // guard the ceiling against rounding in either direction
    while order > 1 && tail_sigma(mu, r_min, order - 1) * quantile <= tail_tol {
        order -= 1;
    }
    while tail_sigma(mu, r_min, order) * quantile > tail_tol {
        order += 1;
    }
    Ok(TruncationPolicy { r_min, tail_tol, fail_prob, certified_order: order })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomLaurentSeries {
    pub mu: f64,
    pub field: Field,
    /// `g_1, ..., g_J`.
    pub coefficients: Vec<C64>,
    pub policy: TruncationPolicy,
}

pub fn sample_series(mu: f64, policy: TruncationPolicy, field: Field, seed: SeedPolicy, trial: u64) -> RandomLaurentSeries {
    let mut rng = seed.stream(trial, StreamTag::Series);
    let coefficients = (0..policy.certified_order).map(|_| field.gaussian(&mut rng)).collect();
    RandomLaurentSeries { mu, field, coefficients, policy }
}

impl RandomLaurentSeries {
    pub fn from_coefficients(mu: f64, field: Field, coefficients: Vec<C64>, policy: TruncationPolicy) -> Self {
        Self { mu, field, coefficients, policy }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// `1 - mu sum_j g_j z^{-j}` by Horner's rule in `w = 1/z`.
    pub fn evaluate(&self, z: C64) -> Result<C64> {
        let modulus = z.norm();
        // points placed on the circle |z| = r_min may round just below it
        if !(modulus >= self.policy.r_min * (1.0 - 1e-12)) {
            return Err(Error::OutsideCertifiedRegion { modulus, r_min: self.policy.r_min });
        }
        let w = ONE / z;
        let mut acc = ZERO;
        for g in self.coefficients.iter().rev() {
            acc = acc * w + g;
        }
        Ok(ONE - self.mu * acc * w)
    }

    /// Modulus bound for all zeros: `|mu sum g_j w^j| < 1` once `|z| > 1 + mu max|g_j|`.
    pub fn default_r_max(&self) -> f64 {
        2.0 + self.mu * self.coefficients.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    pub fn default_region(&self, r_min: f64) -> Result<AnnulusRegion> {
        AnnulusRegion::new(r_min, self.default_r_max().max(1.5 * r_min))
    }
}

/// Zeros of the truncated series in `region`.
pub fn series_zeros(series: &RandomLaurentSeries, region: &AnnulusRegion, opts: &ZeroOptions) -> Result<Vec<LocatedZero>> {
    series_zero_search(series, region, opts).map(|s| s.zeros)
}

pub fn series_zero_search(series: &RandomLaurentSeries, region: &AnnulusRegion, opts: &ZeroOptions) -> Result<ZeroSearch> {
    if region.r_min < series.policy.r_min {
        return Err(Error::OutsideCertifiedRegion { modulus: region.r_min, r_min: series.policy.r_min });
    }
    let f = |z: C64| series.evaluate(z);
    search_zeros(&f, &Region::Annulus(*region), opts)
}

/// Kernel used in the determinantal formula of [`gps_correlation`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpsKernel {
    /// `1 / (1 - w_i conj(w_j))`.
    Plain,
    /// `1 / (1 - w_i conj(w_j))^2`.
    Squared,
}

impl GpsKernel {
    pub fn name(self) -> &'static str {
        match self {
            GpsKernel::Plain => "plain kernel 1/(1 - w conj(w'))",
            GpsKernel::Squared => "squared kernel 1/(1 - w conj(w'))^2",
        }
    }

    /// Mean number of points per unit area in `{a <= |w| <= b}` implied by the
    /// one-point function of this kernel.
    pub fn annulus_density(self, a: f64, b: f64) -> f64 {
        let area = std::f64::consts::PI * (b * b - a * a);
        let count = match self {
            GpsKernel::Plain => (1.0 - a * a).ln() - (1.0 - b * b).ln(),
            GpsKernel::Squared => 1.0 / (1.0 - b * b) - 1.0 / (1.0 - a * a),
        };
        count / area
    }
}

/// `(1/pi^k) det[K(w_i, w_j)]` for points in the open unit disk.
pub fn gps_correlation(points: &[C64], kernel: GpsKernel) -> Result<f64> {
    if let Some(&w) = points.iter().find(|w| !(w.norm() < 1.0)) {
        return Err(Error::OutsideDisk(w));
    }
    let k = points.len();
    let m = ComplexMatrix::from_fn(k, k, |i, j| {
        let base = ONE / (ONE - points[i] * points[j].conj());
        match kernel {
            GpsKernel::Plain => base,
            GpsKernel::Squared => base * base,
        }
    });
    let det = if k == 0 { ONE } else { determinant(&m)? };
    Ok((det.re / std::f64::consts::PI.powi(k as i32)).max(0.0))
}

/// `F(w) = sum_{j<J} a_j w^j` with iid standard complex Gaussian `a_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPowerSeries {
    pub coefficients: Vec<C64>,
}

impl GaussianPowerSeries {
    pub fn sample(order: usize, seed: SeedPolicy, trial: u64) -> Self {
        let mut rng = seed.stream(trial, StreamTag::Series);
        Self { coefficients: (0..order).map(|_| Field::Complex.gaussian(&mut rng)).collect() }
    }

    pub fn evaluate(&self, w: C64) -> C64 {
        self.coefficients.iter().rev().fold(ZERO, |acc, a| acc * w + a)
    }

    /// Number of zeros in `|w| < r`, by the argument principle.
    pub fn zeros_in_disk(&self, r: f64, opts: &WindingOptions) -> Result<i64> {
        let f = |w: C64| Ok(self.evaluate(w));
        winding_number(&f, &Contour::circle(ZERO, r), opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(choose_truncation(1.2, 1e-4, 1e-8, 2.0).unwrap().certified_order, 67);
        assert_eq!(choose_truncation(1.2, 1e300, 1e-8, 2.0).unwrap().certified_order, 1);
        let a = choose_truncation(1.2, 1e-6, 1e-9, 2.0).unwrap().certified_order;
        let b = choose_truncation(2.4, 1e-6, 1e-9, 2.0).unwrap().certified_order;
        assert!(b < a);
        assert!(choose_truncation(1.0, 1e-6, 1e-9, 2.0).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let policy = choose_truncation(1.2, 1e-6, 1e-9, 2.0).unwrap();
        let mut g = vec![ZERO; policy.certified_order];
        let s0 = RandomLaurentSeries::from_coefficients(2.0, Field::Real, g.clone(), policy);
        assert_eq!(s0.evaluate(c(1.5, 0.7)).unwrap(), ONE);
        g[0] = ONE;
        let s1 = RandomLaurentSeries::from_coefficients(2.0, Field::Real, g, policy);
        assert!((s1.evaluate(c(4.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(s1.evaluate(c(1.0, 0.0)), Err(Error::OutsideCertifiedRegion { .. })));
    }

    #[test]
    fn single_coefficient_zero() {
        let policy = choose_truncation(1.2, 1e-6, 1e-9, 3.0).unwrap();
        let mut g = vec![ZERO; policy.certified_order];
        g[0] = ONE;
        let s = RandomLaurentSeries::from_coefficients(3.0, Field::Real, g, policy);
        let region = s.default_region(1.2).unwrap();
        let zs = series_zeros(&s, &region, &ZeroOptions::default()).unwrap();
        assert_eq!(zs.len(), 1);
        assert!((zs[0].position - c(3.0, 0.0)).norm() < 1e-9);
        let empty = RandomLaurentSeries::from_coefficients(3.0, Field::Real, vec![ZERO; 5], policy);
        assert!(series_zeros(&empty, &empty.default_region(1.2).unwrap(), &ZeroOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn gps_values() {
        let pi = std::f64::consts::PI;
        assert!((gps_correlation(&[ZERO], GpsKernel::Plain).unwrap() - 1.0 / pi).abs() < 1e-15);
        assert!((gps_correlation(&[ZERO], GpsKernel::Squared).unwrap() - 1.0 / pi).abs() < 1e-15);
        let h = [c(0.5, 0.0)];
        assert!((gps_correlation(&h, GpsKernel::Plain).unwrap() - 1.0 / (pi * 0.75)).abs() < 1e-14);
        assert!((gps_correlation(&h, GpsKernel::Squared).unwrap() - 1.0 / (pi * 0.5625)).abs() < 1e-14);
        let close = gps_correlation(&[c(0.3, 0.1), c(0.3 + 1e-7, 0.1)], GpsKernel::Plain).unwrap();
        assert!(close < 1e-10);
        assert!(matches!(gps_correlation(&[c(1.0, 0.0)], GpsKernel::Plain), Err(Error::OutsideDisk(_))));
    }

    #[test]
    fn annulus_density_tends_to_the_one_point_function() {
        let pi = std::f64::consts::PI;
        let r: f64 = 0.5;
        let h = 1e-5;
        let plain = GpsKernel::Plain.annulus_density(r - h, r + h);
        let squared = GpsKernel::Squared.annulus_density(r - h, r + h);
        assert!((plain - 1.0 / (pi * (1.0 - r * r))).abs() < 1e-6);
        assert!((squared - 1.0 / (pi * (1.0 - r * r).powi(2))).abs() < 1e-6);
    }

    #[test]
    fn power_series_zero_count() {
        let s = GaussianPowerSeries { coefficients: vec![c(-0.25, 0.0), ZERO, ONE] };
        assert_eq!(s.zeros_in_disk(0.9, &WindingOptions::default()).unwrap(), 2);
        assert_eq!(s.zeros_in_disk(0.4, &WindingOptions::default()).unwrap(), 0);
    }
}
