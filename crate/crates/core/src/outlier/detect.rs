//! Outlier detection for perturbed models.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::weinstein::{
    Backend, DirectEvaluator, Evaluator, HessenbergEvaluator, NeumannEvaluator, NeumannOptions, AUTO_NEUMANN_ABOVE,
};
use super::zeros::{search_zeros, AnnulusRegion, LocatedZero, Region, ZeroOptions};
use crate::ensembles::{unit_ones_vector, PerturbedModel};
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, power_norm_scaled, resolvent_solve, ComplexMatrix, ComplexVector, C64};

/// Guard exponent for margin `eps`: the smallest `m >= ceil(ln n)` with
/// `(m + 1)^{1/m} <= 1 + eps/2`, so that the typical value of
/// `||M^m||^{1/m}` sits well inside `1 + eps`.
pub fn guard_exponent(n: usize, eps: f64) -> usize {
    let start = ((n.max(1) as f64).ln().ceil() as usize).max(1);
    let target = (1.0 + 0.5 * eps).ln();
    (start..100_000).find(|&m| ((m + 1) as f64).ln() / m as f64 <= target).unwrap_or(100_000)
}

/// `(||(X/sqrt(n))^{m0}||^{1/m0}, m0)`. The `m0`-th root damps the error of
/// the power iteration, so a few iterations suffice.
pub fn spectral_radius_guard(x: &ComplexMatrix, eps: f64) -> (f64, usize) {
    let n = x.rows();
    let m0 = guard_exponent(n, eps);
    let norm = power_norm_scaled(x, 1.0 / (n as f64).sqrt(), m0, 1e-4, 12);
    (norm.powf(1.0 / m0 as f64), m0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectOptions {
    pub epsilon: f64,
    pub backend: Backend,
    pub zeros: ZeroOptions,
    pub neumann: NeumannOptions,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            backend: Backend::Auto,
            zeros: ZeroOptions::default(),
            neumann: NeumannOptions::default(),
        }
    }
}

impl DetectOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub zeros: Vec<LocatedZero>,
    /// Measured `||(X/sqrt(n))^{m0}||^{1/m0}`.
    pub spectral_radius_guard: f64,
    pub m0: usize,
    /// The guard reached `1 + eps`.
    pub guard_failed: bool,
    /// The zeros were searched for. False when the guard reaches `1 + 2 eps`,
    /// where `f` may have poles inside the region.
    pub searched: bool,
    pub region: AnnulusRegion,
    pub total_winding: i64,
    pub backend: Backend,
}

impl OutlierReport {
    pub fn positions(&self) -> Vec<C64> {
        self.zeros.iter().flat_map(|z| std::iter::repeat_n(z.position, z.multiplicity)).collect()
    }

    pub fn count(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }
}

/// Outer radius enclosing every eigenvalue of `X/sqrt(n) + A B`.
fn outer_radius(model: &PerturbedModel, r_min: f64) -> f64 {
    let m_norm = operator_norm(&model.x, 1e-4) / (model.n() as f64).sqrt();
    let bound = m_norm + model.a.frobenius_norm() * model.b.frobenius_norm();
    (1.05 * bound + 0.5).max(1.5 * r_min)
}

/// Locates the eigenvalues of `X/sqrt(n) + A B` in `{|z| >= 1 + 2 eps}` as the
/// zeros of the determinant criterion. The guard bounds the spectral radius of
/// `X/sqrt(n)` from above, so the search is skipped only when it reaches the
/// region itself.
pub fn detect_outliers(model: &PerturbedModel, opts: &DetectOptions) -> Result<OutlierReport> {
    let eps = opts.epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    let n = model.n();
    let r_min = 1.0 + 2.0 * eps;
    let (rho, m0) = spectral_radius_guard(&model.x, eps);
    let region = AnnulusRegion::new(r_min, outer_radius(model, r_min))?;
    let backend = match opts.backend {
        Backend::Auto if n > AUTO_NEUMANN_ABOVE => Backend::Neumann,
        Backend::Auto => Backend::Hessenberg,
        b => b,
    };
    let mut report = OutlierReport {
        zeros: Vec::new(),
        spectral_radius_guard: rho,
        m0,
        guard_failed: rho >= 1.0 + eps,
        searched: false,
        region,
        total_winding: 0,
        backend,
    };
    if rho >= r_min {
        return Ok(report);
    }
    report.searched = true;
    if model.rank_bound() == 0 {
        return Ok(report);
    }
    let evaluator: Box<dyn Evaluator> = match backend {
        Backend::Direct | Backend::Auto => Box::new(DirectEvaluator::new(model)),
        Backend::Hessenberg => Box::new(HessenbergEvaluator::new(model)?),
        Backend::Neumann => {
            let r_cert = r_min - 0.1 * (r_min - rho);
            Box::new(NeumannEvaluator::new(model, rho, m0, r_cert, opts.neumann)?)
        }
    };
    let f = |z: C64| evaluator.eval(z);
    let search = search_zeros(&f, &Region::Annulus(region), &opts.zeros)?;
    report.zeros = search.zeros;
    report.total_winding = search.total_winding;
    Ok(report)
}

/// Normalized `(I - X/(z sqrt(n)))^{-1} phi_n`, the eigenvector attached to an
/// outlier `z` of the mean-shift model.
pub fn outlier_eigenvector(x: &ComplexMatrix, z_hat: C64) -> Result<ComplexVector> {
    if z_hat.norm() == 0.0 {
        return Err(Error::Pole);
    }
    let phi = unit_ones_vector(x.rows())?;
    let v = resolvent_solve(x, z_hat, &phi)?.scale(-z_hat);
    Ok(v.normalized())
}

/// Value used where the integrand cannot be evaluated.
pub const JENSEN_CAP: f64 = 34.538_776_394_910_684; // ln(1e15)

/// `log+(1 / |f(z)|)`, capped at `ln(1e15)`.
pub fn jensen_integrand<F>(f: &F, z: C64) -> f64
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    match f(z) {
        Ok(v) if v.norm() > 0.0 => (-v.norm().ln()).clamp(0.0, JENSEN_CAP),
        _ => JENSEN_CAP,
    }
}

/// Midpoint-rule estimate of the integral of `log+(1/|f|)` over the annulus
/// `{1 + 2 eps <= |z| <= 1 + 3 eps}` on a polar grid with `grid` radial and
/// `4 grid` angular cells.
pub fn jensen_log_integral<F>(f: &F, eps: f64, grid: usize) -> f64
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    let grid = grid.max(1);
    let (r0, r1) = (1.0 + 2.0 * eps, 1.0 + 3.0 * eps);
    let dr = (r1 - r0) / grid as f64;
    let na = 4 * grid;
    let dt = TAU / na as f64;
    let mut total = 0.0;
    for i in 0..grid {
        let r = r0 + (i as f64 + 0.5) * dr;
        for j in 0..na {
            let z = C64::from_polar(r, (j as f64 + 0.5) * dt);
            total += jensen_integrand(f, z) * r * dr * dt;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{low_rank_from_diag, mean_shift_factors, sample_iid_matrix, AtomDistribution};
    use crate::rng::SeedPolicy;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn guard_exponent_meets_its_target() {
        for (n, eps) in [(200, 0.1), (1000, 0.15), (10, 1.0)] {
            let m = guard_exponent(n, eps);
            assert!(m as f64 >= (n as f64).ln().ceil());
            assert!(((m + 1) as f64).powf(1.0 / m as f64) <= 1.0 + eps / 2.0);
            if m as f64 > (n as f64).ln().ceil() {
                assert!((m as f64).powf(1.0 / (m - 1) as f64) > 1.0 + eps / 2.0);
            }
        }
    }

    #[test]
    fn empty_perturbation_gives_empty_report() {
        let x = sample_iid_matrix(60, AtomDistribution::Rademacher, SeedPolicy::new(1), 0).unwrap();
        let m = PerturbedModel::unperturbed(x, "k0").unwrap();
        let r = detect_outliers(&m, &DetectOptions::default()).unwrap();
        assert!(r.searched);
        assert!(r.zeros.is_empty() && r.total_winding == 0);
    }

    #[test]
    fn mean_shift_outlier_and_eigenvector() {
        let n = 50;
        let x = sample_iid_matrix(n, AtomDistribution::Rademacher, SeedPolicy::new(3), 0).unwrap();
        let (a, b) = mean_shift_factors(n, c(1.0, 0.0)).unwrap();
        let model = PerturbedModel::new(x.clone(), a, b, "fig3").unwrap();
        let r = detect_outliers(&model, &DetectOptions::default()).unwrap();
        assert!(r.searched);
        assert_eq!(r.count(), 1);
        let z = r.zeros[0].position;
        assert!((z - c((n as f64).sqrt(), 0.0)).norm() < 0.5);
        let v = outlier_eigenvector(&x, z).unwrap();
        let resid = crate::ensembles::assemble_dense(&model).matvec(&v).sub(&v.scale(z)).norm();
        assert!(resid < 1e-6, "{resid}");
    }

    #[test]
    fn guard_flag_and_search_threshold() {
        let n = 20;
        for (scale, flagged, searched) in [(1.05, false, true), (1.15, true, true), (1.3, true, false)] {
            let x = ComplexMatrix::identity(n).scale(c(scale * (n as f64).sqrt(), 0.0));
            let (a, b) = low_rank_from_diag(n, &[c(3.0, 0.0)]).unwrap();
            let model = PerturbedModel::new(x, a, b, "guard").unwrap();
            let r = detect_outliers(&model, &DetectOptions::default()).unwrap();
            assert_eq!((r.guard_failed, r.searched), (flagged, searched), "scale {scale}");
            if searched {
                assert_eq!(r.count(), 1);
                assert!((r.zeros[0].position - c(3.0 + scale, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn eigenvector_of_zero_base_is_phi() {
        let v = outlier_eigenvector(&ComplexMatrix::zeros(4, 4), c(3.0, 0.0)).unwrap();
        assert!(v.iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn backends_find_the_same_outliers() {
        let n = 80;
        let x = sample_iid_matrix(n, AtomDistribution::Rademacher, SeedPolicy::new(9), 2).unwrap();
        let (a, b) = low_rank_from_diag(n, &[c(2.0, 1.0), c(3.0, 0.0), c(2.0, 0.0)]).unwrap();
        let model = PerturbedModel::new(x, a, b, "fig1").unwrap();
        let mut found = Vec::new();
        for backend in [Backend::Direct, Backend::Hessenberg, Backend::Neumann] {
            let opts = DetectOptions { backend, ..Default::default() };
            let r = detect_outliers(&model, &opts).unwrap();
            assert!(r.searched && !r.guard_failed);
            found.push(r.positions());
        }
        assert_eq!(found[0].len(), 3);
        for other in &found[1..] {
            assert!(crate::matching::matching_distance(&found[0], other).unwrap() < 1e-8);
        }
    }

    #[test]
    fn jensen_values() {
        let one = |_z: C64| Ok(c(1.0, 0.0));
        let ten = |_z: C64| Ok(c(10.0, 0.0));
        assert_eq!(jensen_log_integral(&one, 0.1, 8), 0.0);
        assert_eq!(jensen_log_integral(&ten, 0.1, 8), 0.0);
        let g = |z: C64| Ok(1.0 - 3.0 / z);
        assert!((jensen_integrand(&g, c(3.1, 0.0)) - 31f64.ln()).abs() < 1e-12);
        let bad = |z: C64| Err(Error::ResolventSingular { z });
        assert_eq!(jensen_integrand(&bad, c(2.0, 0.0)), JENSEN_CAP);
    }
}
