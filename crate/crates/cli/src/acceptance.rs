//! The acceptance catalog: one pass/fail verdict per criterion, with bands and
//! time limits fixed here.

use std::time::Instant;

use outlab_core::ensembles::{
    assemble_dense, low_rank_from_diag, row_sum_projector, sample_iid_matrix, unit_ones_vector, AtomDistribution,
    PerturbedModel,
};
use outlab_core::linalg::{determinant, eigenvalues, singular_values, ComplexMatrix, C64};
use outlab_core::outlier::{char_poly_ratio_oracle, detect_outliers, weinstein_det, AnnulusRegion, DetectOptions};
use outlab_core::rng::{SeedPolicy, SplitMix64, StreamTag};
use outlab_core::stats::{interlacing_check, kpoint_estimate, PolarGrid};
use serde::Serialize;

use crate::config::{default_workers, ConfigFile, Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::experiments::{laurent_comparison, run_experiment, RunOutput, TrialRecord};
use crate::output::render_csv;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_s: f64,
    pub limit_s: Option<f64>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let limit = self.limit_s.map_or(String::new(), |l| format!(" / {l:.0} s"));
        format!(
            "[{}] {:>2} {} ({:.1} s{limit}): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed_s,
            self.detail
        )
    }
}

type Verdict = Result<(bool, String), CliError>;

struct Criterion {
    id: u32,
    title: &'static str,
    limit_s: Option<f64>,
    run: fn(usize) -> Verdict,
}

const CATALOG: [Criterion; 11] = [
    Criterion { id: 1, title: "determinant oracle equivalence", limit_s: Some(30.0), run: oracle_equivalence },
    Criterion { id: 2, title: "fixed low-rank perturbation (n=200)", limit_s: Some(120.0), run: fig1 },
    Criterion { id: 3, title: "mean shift outlier and eigenvector", limit_s: Some(120.0), run: fig3 },
    Criterion { id: 4, title: "mean shift at mu sqrt(n) = 2 (n=1000)", limit_s: Some(600.0), run: fig4 },
    Criterion { id: 5, title: "spectral radius and power norms", limit_s: None, run: norms },
    Criterion { id: 6, title: "circular law for X and X P", limit_s: None, run: circular_law },
    Criterion { id: 7, title: "zero-row-sum perturbation invariance", limit_s: None, run: invariance },
    Criterion { id: 8, title: "bilinear form CLT", limit_s: Some(300.0), run: clt },
    Criterion { id: 9, title: "network model vs random Laurent series", limit_s: Some(1800.0), run: laurent },
    Criterion { id: 10, title: "Gaussian power series zero density", limit_s: None, run: gps },
    Criterion { id: 11, title: "property suites and reproducibility", limit_s: None, run: properties },
];

/// Runs the catalog in order, calling `report` after each criterion.
pub fn run_catalog(workers: Option<usize>, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let workers = workers.unwrap_or_else(default_workers);
    CATALOG
        .iter()
        .map(|c| {
            let start = Instant::now();
            let verdict = (c.run)(workers);
            let elapsed_s = start.elapsed().as_secs_f64();
            let (mut passed, mut detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
            if let Some(limit) = c.limit_s {
                if elapsed_s > limit {
                    passed = false;
                    detail.push_str(&format!("; exceeded the {limit:.0} s limit"));
                }
            }
            let result = CriterionResult { id: c.id, title: c.title, passed, detail, elapsed_s, limit_s: c.limit_s };
            report(&result);
            result
        })
        .collect()
}

fn config(experiment: Experiment, workers: usize, overrides: ConfigFile) -> Result<ExperimentConfig, CliError> {
    let base = ConfigFile { experiment: Some(experiment), workers: Some(workers), ..Default::default() };
    ExperimentConfig::resolve(base, overrides)
}

fn run(experiment: Experiment, workers: usize, overrides: ConfigFile) -> Result<RunOutput, CliError> {
    run_experiment(&config(experiment, workers, overrides)?)
}

/// Verdict from named checks of a run, failing on any failed trial.
fn checks_of(out: &RunOutput, names: &[&str]) -> Verdict {
    let s = &out.summary;
    let mut passed = s.failed_trials.is_empty();
    let mut parts = Vec::new();
    if !s.failed_trials.is_empty() {
        parts.push(format!("{} failed trials (first: {})", s.failed_trials.len(), s.failed_trials[0].error));
    }
    for name in names {
        match s.check(name) {
            Some(c) => {
                passed &= c.passed;
                parts.push(c.detail.clone());
            }
            None => {
                passed = false;
                parts.push(format!("{name}: missing"));
            }
        }
    }
    Ok((passed, parts.join("; ")))
}

fn and(a: Verdict, b: Verdict) -> Verdict {
    let (pa, da) = a?;
    let (pb, db) = b?;
    Ok((pa && pb, format!("{da} | {db}")))
}

fn gaussian_matrix(rows: usize, cols: usize, scale: f64, rng: &mut SplitMix64) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| AtomDistribution::GaussianComplex.sample(rng) * scale)
}

fn oracle_equivalence(_workers: usize) -> Verdict {
    let seed = SeedPolicy::new(0x0ac1e);
    let mut worst = 0.0f64;
    let mut evaluations = 0;
    for inst in 0..100u64 {
        let n = 10 + (inst as usize * 7) % 51;
        let k = 1 + inst as usize % 3;
        let atom = [AtomDistribution::Rademacher, AtomDistribution::GaussianReal, AtomDistribution::GaussianComplex][inst as usize % 3];
        let x = sample_iid_matrix(n, atom, seed, inst)?;
        let mut rng = seed.stream(inst, StreamTag::Auxiliary(1));
        let s = 1.0 / (n as f64).sqrt();
        let a = gaussian_matrix(n, k, 1.0, &mut rng);
        let b = gaussian_matrix(k, n, s, &mut rng);
        let model = PerturbedModel::new(x, a, b, "oracle")?;
        for _ in 0..10 {
            let z = C64::from_polar(1.5 + 2.5 * rng.next_f64(), std::f64::consts::TAU * rng.next_f64());
            let f = weinstein_det(&model, z)?;
            let g = char_poly_ratio_oracle(&model, z)?;
            worst = worst.max((f - g).norm() / (1.0 + g.norm()));
            evaluations += 1;
        }
    }
    Ok((worst <= 1e-8, format!("{evaluations} evaluations, max |f - oracle| / (1 + |oracle|) = {worst:.3e} (band 1e-8)")))
}

fn fig1(workers: usize) -> Verdict {
    let out = run(Experiment::Fig1, workers, ConfigFile { n: Some(200), trials: Some(20), ..Default::default() })?;
    checks_of(&out, &["predicted_outliers", "detect_matches_dense"])
}

fn fig3(workers: usize) -> Verdict {
    let small = run(Experiment::Fig3, workers, ConfigFile { n: Some(50), trials: Some(50), ..Default::default() })?;
    let large = run(Experiment::Fig3, workers, ConfigFile { n: Some(500), trials: Some(20), ..Default::default() })?;
    and(checks_of(&small, &["predicted_outliers", "detect_matches_dense"]), checks_of(&large, &["eigenvector_near_phi"]))
}

fn fig4(workers: usize) -> Verdict {
    let out = run(Experiment::Fig4, workers, ConfigFile { n: Some(1000), trials: Some(20), ..Default::default() })?;
    checks_of(&out, &["predicted_outliers"])
}

fn norms(workers: usize) -> Verdict {
    let out = run(Experiment::Norms, workers, ConfigFile { n: Some(1000), trials: Some(5), ..Default::default() })?;
    checks_of(&out, &["spectral_radius_band", "power_norm_band"])
}

fn circular_law(workers: usize) -> Verdict {
    let plain = run(Experiment::Norms, workers, ConfigFile { n: Some(1000), trials: Some(10), ..Default::default() })?;
    let projected = run(Experiment::ZeroRowSum, workers, ConfigFile { n: Some(1000), trials: Some(10), ..Default::default() })?;
    and(checks_of(&plain, &["circular_law_ks"]), checks_of(&projected, &["circular_law_ks", "spectral_radius_band"]))
}

fn invariance(workers: usize) -> Verdict {
    let mut verdict: Verdict = Ok((true, String::new()));
    for norm in [1.0, 10.0, 1000.0] {
        let out = run(
            Experiment::ZeroRowSum,
            workers,
            ConfigFile { n: Some(100), trials: Some(20), mu: Some(norm), ..Default::default() },
        )?;
        let (p, d) = checks_of(&out, &["perturbation_invariance"])?;
        let (p0, d0) = verdict?;
        verdict = Ok((p0 && p, format!("{d0}{}|psi| = {norm}: {d}", if d0.is_empty() { "" } else { "; " })));
    }
    verdict
}

fn clt(workers: usize) -> Verdict {
    let out = run(Experiment::Clt, workers, ConfigFile { n: Some(2000), trials: Some(400), j_max: Some(2), ..Default::default() })?;
    checks_of(&out, &["z1_gaussian", "z2_gaussian", "z1_z2_uncorrelated"])
}

fn laurent(workers: usize) -> Verdict {
    let base = ConfigFile { trials: Some(200), mu: Some(2.0), p: Some(0.25), epsilon: Some(0.15), ..Default::default() };
    let small = run(Experiment::LaurentCompare, workers, ConfigFile { n: Some(500), series_per_trial: Some(10), ..base.clone() })?;
    let large = run(Experiment::LaurentCompare, workers, ConfigFile { n: Some(1000), series_per_trial: Some(1), ..base })?;
    let (mut passed, mut detail) = checks_of(&small, &["mean_count", "radial_histogram"])?;
    if let Some(first) = large.summary.failed_trials.first() {
        passed = false;
        detail.push_str(&format!("; n=1000: {} failed trials (first: {})", large.summary.failed_trials.len(), first.error));
    }
    let ok = |o: &RunOutput| -> Vec<TrialRecord> { o.records.iter().filter(|r| !r.failed()).cloned().collect() };
    let (rs, rl) = (ok(&small), ok(&large));
    let cs = laurent_comparison(1.3, &rs.iter().collect::<Vec<_>>())?;
    let cl = laurent_comparison(1.3, &rl.iter().collect::<Vec<_>>())?;
    for (m, name) in [(0, "E[N]"), (1, "E[N^2]")] {
        let (a, b) = (cs.model_count_moments[m], cl.model_count_moments[m]);
        let rel = (a - b).abs() / a;
        passed &= rel <= 0.25;
        detail.push_str(&format!("; {name} n=500 {a:.4} vs n=1000 {b:.4} ({:.1}% apart, band 25%)", 100.0 * rel));
    }
    Ok((passed, detail))
}

fn gps(workers: usize) -> Verdict {
    let out = run(Experiment::GpsCheck, workers, ConfigFile { n: Some(200), trials: Some(5000), ..Default::default() })?;
    checks_of(&out, &["gps_kernel"])
}

fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

/// Trace, determinant and singular-value identities on random matrices.
fn linalg_suite() -> Result<(usize, f64), CliError> {
    let seed = SeedPolicy::new(0x1a1c);
    let mut worst = 0.0f64;
    let mut count = 0;
    for t in 0..40u64 {
        let n = 2 + (t as usize * 5) % 39;
        let atom = if t % 2 == 0 { AtomDistribution::GaussianComplex } else { AtomDistribution::Rademacher };
        let m = outlab_core::linalg::normalized(&sample_iid_matrix(n, atom, seed, t)?);
        let eigs = eigenvalues(&m)?;
        let det = determinant(&m)?;
        let sv = singular_values(&m);
        worst = worst.max(rel_err(eigs.iter().sum(), m.trace()));
        worst = worst.max(rel_err(eigs.iter().product(), det));
        let fro2 = m.frobenius_norm().powi(2);
        worst = worst.max((sv.iter().map(|s| s * s).sum::<f64>() - fro2).abs() / (1.0 + fro2));
        worst = worst.max((sv.iter().product::<f64>() - det.norm()).abs() / (1.0 + det.norm()));
        count += 4;
    }
    Ok((count, worst))
}

/// `P^2 = P`, `P^* = P`, `P phi = 0` and `tr P = n - 1`.
fn projector_suite() -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for n in [1, 2, 3, 10, 57, 128] {
        let p = row_sum_projector(n)?;
        worst = worst.max(p.matmul(&p)?.max_abs_diff(&p));
        worst = worst.max(p.adjoint().max_abs_diff(&p));
        worst = worst.max(p.matvec(&unit_ones_vector(n)?).norm());
        worst = worst.max((p.trace() - C64::new(n as f64 - 1.0, 0.0)).norm());
    }
    Ok(worst)
}

fn interlacing_suite() -> Result<usize, CliError> {
    let seed = SeedPolicy::new(0x1e1a);
    let mut violations = 0;
    for t in 0..200u64 {
        let mut rng = seed.stream(t, StreamTag::Auxiliary(2));
        let rows = 2 + (t as usize * 3) % 23;
        let cols = if t % 4 == 0 { rows + 1 + t as usize % 3 } else { rows };
        let m = gaussian_matrix(rows, cols, 1.0, &mut rng);
        let scale = 10f64.powi((t % 5) as i32 - 2);
        let u: Vec<C64> = (0..rows).map(|_| AtomDistribution::GaussianComplex.sample(&mut rng) * scale).collect();
        let v: Vec<C64> = (0..cols).map(|_| AtomDistribution::GaussianComplex.sample(&mut rng)).collect();
        if !interlacing_check(&m, &u, &v)?.holds {
            violations += 1;
        }
    }
    Ok(violations)
}

/// Winding total, located multiplicities and the dense count in the region
/// agree; the one-point density integrates to the mean count.
fn counting_suite() -> Result<(usize, f64), CliError> {
    let seed = SeedPolicy::new(0xc0c0);
    let mut mismatches = 0;
    let mut per_trial = Vec::new();
    let diag = [C64::new(2.0, 1.0), C64::new(-1.5, 0.5), C64::new(0.0, 1.6)];
    for t in 0..20u64 {
        let n = 40 + (t as usize * 3) % 41;
        let x = sample_iid_matrix(n, AtomDistribution::Rademacher, seed, t)?;
        let (a, b) = low_rank_from_diag(n, &diag[..1 + t as usize % 3])?;
        let model = PerturbedModel::new(x, a, b, "counting")?;
        let report = detect_outliers(&model, &DetectOptions::default())?;
        if !report.searched {
            continue;
        }
        let dense = eigenvalues(&assemble_dense(&model))?.into_iter().filter(|z| report.region.contains(*z)).count();
        if report.total_winding != report.count() as i64 || report.count() != dense {
            mismatches += 1;
        }
        per_trial.push(report.positions());
    }
    let grid = PolarGrid::new(AnnulusRegion::new(1.2, 4.0)?, 3, 5)?;
    let est = kpoint_estimate(&per_trial, 1, &grid)?;
    let integral: f64 = est.densities.iter().enumerate().map(|(c, d)| d * grid.area(c)).sum();
    let inside = per_trial.iter().flatten().filter(|z| grid.cell(**z).is_some()).count() as f64 / per_trial.len() as f64;
    Ok((mismatches, (integral - inside).abs()))
}

/// CSV bytes for workers 1 and 8, and for a re-run from the echoed config.
fn reproducibility_suite() -> Result<bool, CliError> {
    let overrides = ConfigFile { n: Some(60), trials: Some(8), master_seed: Some(42), ..Default::default() };
    let one = run(Experiment::Fig1, 1, overrides.clone())?;
    let eight = run(Experiment::Fig1, 8, overrides)?;
    let echo = serde_json::to_string(&one.summary.config).map_err(|e| CliError::Usage(e.to_string()))?;
    let again = run_experiment(&ExperimentConfig::resolve(ConfigFile::parse(&echo)?, ConfigFile::default())?)?;
    let bytes = render_csv(&one)?;
    Ok(bytes.len() > 40 && bytes == render_csv(&eight)? && bytes == render_csv(&again)?)
}

fn properties(_workers: usize) -> Verdict {
    let (identities, linalg_worst) = linalg_suite()?;
    let projector_worst = projector_suite()?;
    let violations = interlacing_suite()?;
    let (mismatches, integral_gap) = counting_suite()?;
    let reproducible = reproducibility_suite()?;
    let passed = linalg_worst <= 1e-8
        && projector_worst <= 1e-12
        && violations == 0
        && mismatches == 0
        && integral_gap <= 1e-9
        && reproducible;
    Ok((
        passed,
        format!(
            "{identities} linalg identities (max rel err {linalg_worst:.2e}); projector algebra err {projector_worst:.2e}; \
             {violations} interlacing violations in 200; {mismatches} counting mismatches, density integral gap {integral_gap:.1e}; \
             CSV bytes {} across workers 1/8 and config echo",
            if reproducible { "identical" } else { "differ" }
        ),
    ))
}
