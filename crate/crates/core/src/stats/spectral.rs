//! Statistics of a single spectrum.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_singular_value, power_norm_scaled, singular_values, ComplexMatrix, C64};

pub fn spectral_radius(eigs: &[C64]) -> Result<f64> {
    if eigs.is_empty() {
        return Err(Error::InvalidParameter("spectral radius of an empty spectrum".into()));
    }
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Counts of eigenvalues on a `bins x bins` grid over `[lo.re, hi.re) x [lo.im, hi.im)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsdHistogram {
    pub lo: C64,
    pub hi: C64,
    pub bins: usize,
    /// Row-major by imaginary part, then real part.
    pub counts: Vec<u64>,
    pub outside: u64,
    pub n_eigenvalues: u64,
}

impl EsdHistogram {
    pub fn count(&self, re_bin: usize, im_bin: usize) -> u64 {
        self.counts[im_bin * self.bins + re_bin]
    }

    pub fn bin_of(&self, z: C64) -> Option<(usize, usize)> {
        let pick = |x: f64, lo: f64, hi: f64| {
            let t = ((x - lo) / (hi - lo) * self.bins as f64).floor();
            (x >= lo && x < hi && t >= 0.0).then(|| (t as usize).min(self.bins - 1))
        };
        Some((pick(z.re, self.lo.re, self.hi.re)?, pick(z.im, self.lo.im, self.hi.im)?))
    }
}

pub fn esd_histogram(eigs: &[C64], lo: C64, hi: C64, bins: usize) -> Result<EsdHistogram> {
    if bins == 0 || !(lo.re < hi.re && lo.im < hi.im) {
        return Err(Error::InvalidParameter(format!("histogram needs bins >= 1 and lo < hi, got {bins}, {lo}, {hi}")));
    }
    let mut h = EsdHistogram { lo, hi, bins, counts: vec![0; bins * bins], outside: 0, n_eigenvalues: eigs.len() as u64 };
    for &z in eigs {
        match h.bin_of(z) {
            Some((i, j)) => h.counts[j * bins + i] += 1,
            None => h.outside += 1,
        }
    }
    Ok(h)
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// `(radial, angular)` KS distances to the uniform law on the unit disk: radii
/// against `min(r^2, 1)`, arguments against the uniform law on `(-pi, pi]`.
pub fn circular_law_distance(eigs: &[C64]) -> Result<(f64, f64)> {
    if eigs.is_empty() {
        return Err(Error::InvalidParameter("circular law distance of an empty spectrum".into()));
    }
    let radii: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    let args: Vec<f64> = eigs.iter().map(|z| if z.arg() == -PI { PI } else { z.arg() }).collect();
    let radial = ks_distance(&radii, |r| (r * r).min(1.0));
    let angular = ks_distance(&args, |t| ((t + PI) / (2.0 * PI)).clamp(0.0, 1.0));
    Ok((radial, angular))
}

/// `||(X/sqrt(n))^m||_op / (m + 1)`.
pub fn power_norm_ratio(x: &ComplexMatrix, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("power must be at least 1".into()));
    }
    let n = x.rows() as f64;
    Ok(power_norm_scaled(x, 1.0 / n.sqrt(), m, 1e-6, 500) / (m + 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterlacingReport {
    pub holds: bool,
    /// Largest amount by which an inequality of the chain fails (0 if none).
    pub max_violation: f64,
    pub slack: f64,
}

/// Weyl chain for `E = u v^*`: with singular values in decreasing order,
/// `s_{i-1}(M) >= s_i(M + E) >= s_{i+1}(M)`, and the same with the roles of the
/// two matrices exchanged.
pub fn interlacing_check(m: &ComplexMatrix, u: &[C64], v: &[C64]) -> Result<InterlacingReport> {
    if u.len() != m.rows() || v.len() != m.cols() {
        return Err(Error::InvalidDimension(format!(
            "rank-one factors of lengths {} and {} for a {}x{} matrix",
            u.len(),
            v.len(),
            m.rows(),
            m.cols()
        )));
    }
    let p = ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] + u[i] * v[j].conj());
    let s = singular_values(m);
    let t = singular_values(&p);
    let slack = 1e-9 * m.frobenius_norm().max(p.frobenius_norm());
    let chain = |a: &[f64], b: &[f64]| {
        let mut worst = 0.0f64;
        for i in 0..b.len() {
            if i >= 1 {
                worst = worst.max(b[i] - a[i - 1]);
            }
            if i + 1 < a.len() {
                worst = worst.max(a[i + 1] - b[i]);
            }
        }
        worst
    };
    let max_violation = chain(&s, &t).max(chain(&t, &s)).max(0.0);
    Ok(InterlacingReport { holds: max_violation <= slack, max_violation, slack })
}

/// Smallest singular value of `M - z I`.
pub fn least_singular_diagnostic(m: &ComplexMatrix, z: C64) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    Ok(least_singular_value(&m.shift_diagonal(z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn radius_examples() {
        assert_eq!(spectral_radius(&[c(2.0, 0.0), c(3.0, 0.0), c(0.0, -5.0)]).unwrap(), 5.0);
        let circle: Vec<C64> = (0..7).map(|k| C64::from_polar(1.0, k as f64)).collect();
        assert!((spectral_radius(&circle).unwrap() - 1.0).abs() < 1e-15);
        assert!(spectral_radius(&[]).is_err());
    }

    #[test]
    fn histogram_conventions() {
        let h = esd_histogram(&[c(0.25, 0.25)], c(0.0, 0.0), c(1.0, 1.0), 2).unwrap();
        assert_eq!(h.count(0, 0), 1);
        let pts = [c(0.0, 0.0), c(1.0, 0.5), c(0.5, 0.5), c(-0.1, 0.2), c(0.99, 0.99)];
        let h = esd_histogram(&pts, c(0.0, 0.0), c(1.0, 1.0), 2).unwrap();
        // hi edge is excluded
        assert_eq!(h.outside, 2);
        assert_eq!(h.counts.iter().sum::<u64>() + h.outside, h.n_eigenvalues);
        assert_eq!(h.count(1, 1), 2);
        assert!(esd_histogram(&pts, c(0.0, 0.0), c(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn all_at_origin_has_radial_distance_one() {
        let (r, _) = circular_law_distance(&[C64::new(0.0, 0.0); 10]).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_identity_norm_ratio() {
        let n = 16;
        let x = ComplexMatrix::identity(n).scale(c((n as f64).sqrt(), 0.0));
        for m in 1..4 {
            assert!((power_norm_ratio(&x, m).unwrap() - 1.0 / (m + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn interlacing_examples() {
        let m = ComplexMatrix::from_diag(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let e1 = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let zero = [c(0.0, 0.0); 3];
        assert!(interlacing_check(&m, &zero, &zero).unwrap().holds);
        let r = interlacing_check(&m, &e1, &e1).unwrap();
        assert!(r.holds && r.max_violation == 0.0);
    }

    #[test]
    fn least_singular_examples() {
        let two = ComplexMatrix::identity(3).scale(c(2.0, 0.0));
        assert!(least_singular_diagnostic(&two, c(2.0, 0.0)).unwrap() < 1e-15);
        let zero = ComplexMatrix::zeros(3, 3);
        assert!((least_singular_diagnostic(&zero, c(1.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
    }
}
