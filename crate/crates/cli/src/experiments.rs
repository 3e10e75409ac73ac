//! Trial execution and per-experiment aggregation.

use std::collections::BTreeMap;
use std::time::Instant;

use outlab_core::ensembles::{
    assemble_dense, low_rank_from_diag, mean_shift_factors, outer_factors, rajan_abbott_factors,
    random_zero_sum_vector, sample_iid_matrix, unit_ones_vector, PerturbedModel,
};
use outlab_core::laurent::{
    choose_truncation, sample_series, series_zeros, Field, GaussianPowerSeries, GpsKernel, DEFAULT_FAIL_PROB,
    DEFAULT_TAIL_TOL,
};
use outlab_core::linalg::{bilinear_powers, eigenvalues, inner, normalized, ComplexMatrix};
use outlab_core::matching::{match_points, matching_distance};
use outlab_core::outlier::{detect_outliers, outlier_eigenvector, AnnulusRegion, DetectOptions, OutlierReport, WindingOptions};
use outlab_core::rng::{SeedPolicy, StreamTag};
use outlab_core::stats::{
    circular_law_distance, kpoint_estimate, outlier_count_moments, power_norm_ratio, spectral_radius, PolarGrid,
};
use outlab_core::{Error, C64};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;

/// Radii at which `gps_check` measures the zero density.
pub const GPS_RADII: [f64; 3] = [0.3, 0.5, 0.7];
pub const GPS_HALF_WIDTH: f64 = 0.05;
pub const GPS_REL_TOL: f64 = 0.15;
/// Outer edge of the radial histograms in `laurent_compare`.
pub const LAURENT_HIST_MAX: f64 = 3.0;
pub const LAURENT_HIST_BINS: usize = 4;
/// Fraction of failed trials above which a run exits with status 1.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    /// Seed of the trial's matrix stream.
    pub seed: u64,
    /// Dense spectrum, when a dense solve ran.
    pub eigenvalues: Option<Vec<C64>>,
    pub outliers: Option<OutlierReport>,
    /// Second point set of the trial (zeros of the comparison series in
    /// `laurent_compare`).
    pub comparison: Vec<Vec<C64>>,
    pub stats: BTreeMap<String, f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.stats.get(key).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailedTrial {
    pub trial: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub trial_seeds: Vec<u64>,
    pub trials: usize,
    pub failed_trials: Vec<FailedTrial>,
    pub aggregates: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn failure_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failed_trials.len() as f64 / self.trials as f64
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<TrialRecord>,
    /// Predicted outlier locations drawn in the scatter plot.
    pub predictions: Vec<C64>,
}

/// Runs every trial of `config` on a pool of `config.workers` threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", config.workers)))?;
    let records: Vec<TrialRecord> =
        pool.install(|| (0..config.trials as u64).into_par_iter().map(|t| run_trial(config, t)).collect());
    let (aggregates, checks) = if records.iter().all(|r| r.failed()) { Default::default() } else { summarize(config, &records) };
    let failed_trials =
        records.iter().filter_map(|r| r.error.clone().map(|error| FailedTrial { trial: r.trial, error })).collect();
    let seed = SeedPolicy::new(config.master_seed);
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment,
        config: config.clone(),
        master_seed: config.master_seed,
        trial_seeds: (0..config.trials as u64).map(|t| seed.stream_seed(t, StreamTag::Matrix)).collect(),
        trials: config.trials,
        failed_trials,
        passed: checks.iter().all(|c| c.passed),
        aggregates,
        checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { summary, records, predictions: predictions(config) })
}

/// Deterministic outlier locations for the experiments that have them.
pub fn predictions(config: &ExperimentConfig) -> Vec<C64> {
    let r_min = 1.0 + 2.0 * config.epsilon;
    match config.experiment {
        Experiment::Fig1 => config.diag_entries().into_iter().filter(|c| c.norm() >= r_min).collect(),
        Experiment::Fig3 | Experiment::Fig4 => {
            let z = config.mu * (config.n as f64).sqrt();
            if z >= r_min {
                vec![C64::new(z, 0.0)]
            } else {
                Vec::new()
            }
        }
        _ => Vec::new(),
    }
}

#[derive(Default)]
struct TrialData {
    eigenvalues: Option<Vec<C64>>,
    outliers: Option<OutlierReport>,
    comparison: Vec<Vec<C64>>,
    stats: BTreeMap<String, f64>,
}

fn run_trial(config: &ExperimentConfig, trial: u64) -> TrialRecord {
    let seed = SeedPolicy::new(config.master_seed);
    let start = Instant::now();
    let result = match config.experiment {
        Experiment::Fig1 | Experiment::Fig3 | Experiment::Fig4 | Experiment::Fig5 => perturbed_trial(config, seed, trial),
        Experiment::Clt => clt_trial(config, seed, trial),
        Experiment::ZeroRowSum => zero_row_sum_trial(config, seed, trial),
        Experiment::LaurentCompare => laurent_trial(config, seed, trial),
        Experiment::GpsCheck => gps_trial(config, seed, trial),
        Experiment::Norms => norms_trial(config, seed, trial),
    };
    let (data, error) = match result {
        Ok(d) => (d, None),
        Err(e) => (TrialData::default(), Some(e.to_string())),
    };
    TrialRecord {
        trial,
        seed: seed.stream_seed(trial, StreamTag::Matrix),
        eigenvalues: data.eigenvalues,
        outliers: data.outliers,
        comparison: data.comparison,
        stats: data.stats,
        wall_time_s: start.elapsed().as_secs_f64(),
        error,
    }
}

/// Detection that fails the trial when the search could not run.
fn detect_searched(model: &PerturbedModel, eps: f64) -> Result<OutlierReport, Error> {
    let report = detect_outliers(model, &DetectOptions::with_epsilon(eps))?;
    if !report.searched {
        return Err(Error::Precondition(format!(
            "spectral radius guard {:.4} reached the search region |z| >= {}",
            report.spectral_radius_guard, report.region.r_min
        )));
    }
    Ok(report)
}

/// Dense eigenvalues of `model` inside `region`.
fn in_region(eigs: &[C64], region: &AnnulusRegion) -> Vec<C64> {
    eigs.iter().copied().filter(|z| region.contains(*z)).collect()
}

fn perturbed_trial(config: &ExperimentConfig, seed: SeedPolicy, trial: u64) -> Result<TrialData, Error> {
    let n = config.n;
    let x = sample_iid_matrix(n, config.atom, seed, trial)?;
    let (a, b) = match config.experiment {
        Experiment::Fig1 => low_rank_from_diag(n, &config.diag_entries())?,
        Experiment::Fig5 => rajan_abbott_factors(n, config.mu, config.p, seed, trial)?,
        _ => mean_shift_factors(n, C64::new(config.mu, 0.0))?,
    };
    let model = PerturbedModel::new(x, a, b, config.experiment.name())?;
    let report = detect_outliers(&model, &DetectOptions::with_epsilon(config.epsilon))?;
    let eigs = eigenvalues(&assemble_dense(&model))?;
    let dense_out = in_region(&eigs, &report.region);

    let mut stats = BTreeMap::new();
    stats.insert("guard".into(), report.spectral_radius_guard);
    stats.insert("dense_outlier_count".into(), dense_out.len() as f64);
    if !report.searched {
        // the bulk reaches the search region; the trial counts as a miss
        stats.insert("searched".into(), 0.0);
        return Ok(TrialData { eigenvalues: Some(eigs), outliers: Some(report), stats, ..Default::default() });
    }
    stats.insert("searched".into(), 1.0);
    let found = report.positions();
    stats.insert("outlier_count".into(), report.count() as f64);
    stats.insert("detect_dense_distance".into(), matching_distance(&found, &dense_out).unwrap_or(f64::INFINITY));
    let bulk = eigs.iter().filter(|z| z.norm() < report.region.r_min).map(|z| z.norm()).fold(0.0, f64::max);
    stats.insert("bulk_radius".into(), bulk);
    let predicted = predictions(config);
    if !predicted.is_empty() {
        let d = match_points(&found, &predicted).max_distance().unwrap_or(f64::INFINITY);
        stats.insert("prediction_distance".into(), d);
    }
    if config.experiment == Experiment::Fig3 && found.len() == 1 {
        stats.insert("eigenvector_distance".into(), eigenvector_distance(&model.x, found[0])?);
    }
    Ok(TrialData { eigenvalues: Some(eigs), outliers: Some(report), stats, ..Default::default() })
}

/// `min_theta ||e^{i theta} v - phi_n||` for the outlier eigenvector `v`.
pub fn eigenvector_distance(x: &ComplexMatrix, z: C64) -> Result<f64, Error> {
    let v = outlier_eigenvector(x, z)?;
    let phi = unit_ones_vector(x.rows())?;
    let overlap = inner(&phi, &v).norm().min(1.0);
    Ok((2.0 - 2.0 * overlap).max(0.0).sqrt())
}

fn clt_trial(config: &ExperimentConfig, seed: SeedPolicy, trial: u64) -> Result<TrialData, Error> {
    let n = config.n;
    let x = sample_iid_matrix(n, config.atom, seed, trial)?;
    let phi = unit_ones_vector(n)?;
    let scale = (n as f64).sqrt();
    let mut stats = BTreeMap::new();
    for (j, z) in bilinear_powers(&x, config.j_max, &phi, &phi)?.into_iter().enumerate() {
        stats.insert(format!("z{}_re", j + 1), z.re * scale);
        stats.insert(format!("z{}_im", j + 1), z.im * scale);
    }
    Ok(TrialData { stats, ..Default::default() })
}

/// `X P_n` formed as `X - (X phi) phi^*` in `O(n^2)`.
pub fn zero_row_sum_matrix(x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.cols();
    let means: Vec<C64> = (0..x.rows()).map(|i| x.row(i).iter().sum::<C64>() / n as f64).collect();
    ComplexMatrix::from_fn(x.rows(), n, |i, j| x[(i, j)] - means[i])
}

fn zero_row_sum_trial(config: &ExperimentConfig, seed: SeedPolicy, trial: u64) -> Result<TrialData, Error> {
    let n = config.n;
    let xp = zero_row_sum_matrix(&sample_iid_matrix(n, config.atom, seed, trial)?);
    let phi = unit_ones_vector(n)?;
    let psi = random_zero_sum_vector(n, config.mu, seed, trial)?;
    let (a, b) = outer_factors(&phi, &psi);
    let base = eigenvalues(&normalized(&xp))?;
    let model = PerturbedModel::new(xp, a, b, "zero_row_sum")?;
    let perturbed = eigenvalues(&assemble_dense(&model))?;
    let (radial, angular) = circular_law_distance(&base)?;
    let mut stats = BTreeMap::new();
    stats.insert("spectral_radius".into(), spectral_radius(&base)?);
    stats.insert("ks_radial".into(), radial);
    stats.insert("ks_angular".into(), angular);
    stats.insert("invariance_distance".into(), matching_distance(&base, &perturbed).unwrap_or(f64::INFINITY));
    let r_min = 1.0 + 2.0 * config.epsilon;
    stats.insert("outlier_count".into(), perturbed.iter().filter(|z| z.norm() >= r_min).count() as f64);
    Ok(TrialData { eigenvalues: Some(perturbed), stats, ..Default::default() })
}

fn laurent_trial(config: &ExperimentConfig, seed: SeedPolicy, trial: u64) -> Result<TrialData, Error> {
    let n = config.n;
    let x = sample_iid_matrix(n, config.atom, seed, trial)?;
    let (a, b) = rajan_abbott_factors(n, config.mu, config.p, seed, trial)?;
    let model = PerturbedModel::new(x, a, b, "laurent_compare")?;
    let report = detect_searched(&model, config.epsilon)?;
    let r_min = report.region.r_min;
    let policy = choose_truncation(r_min, DEFAULT_TAIL_TOL, DEFAULT_FAIL_PROB, config.mu)?;
    let field = if config.atom.is_real() { Field::Real } else { Field::Complex };
    let zero_opts = DetectOptions::default().zeros;
    let mut comparison = Vec::with_capacity(config.series_per_trial);
    for s in 0..config.series_per_trial as u64 {
        let series = sample_series(config.mu, policy, field, seed, trial * config.series_per_trial as u64 + s);
        let zeros = series_zeros(&series, &series.default_region(r_min)?, &zero_opts)?;
        comparison.push(zeros.iter().flat_map(|z| std::iter::repeat_n(z.position, z.multiplicity)).collect::<Vec<_>>());
    }
    let mut stats = BTreeMap::new();
    stats.insert("outlier_count".into(), report.count() as f64);
    stats.insert("guard".into(), report.spectral_radius_guard);
    let series_mean = comparison.iter().map(|z| z.len() as f64).sum::<f64>() / comparison.len() as f64;
    stats.insert("series_count_mean".into(), series_mean);
    stats.insert("truncation_order".into(), policy.certified_order as f64);
    Ok(TrialData { outliers: Some(report), comparison, stats, ..Default::default() })
}

fn gps_trial(config: &ExperimentConfig, seed: SeedPolicy, trial: u64) -> Result<TrialData, Error> {
    let series = GaussianPowerSeries::sample(config.n, seed, trial);
    let opts = WindingOptions::default();
    let mut stats = BTreeMap::new();
    for r in GPS_RADII {
        let count = series.zeros_in_disk(r + GPS_HALF_WIDTH, &opts)? - series.zeros_in_disk(r - GPS_HALF_WIDTH, &opts)?;
        stats.insert(format!("annulus_count_{r}"), count as f64);
    }
    Ok(TrialData { stats, ..Default::default() })
}

fn norms_trial(config: &ExperimentConfig, seed: SeedPolicy, trial: u64) -> Result<TrialData, Error> {
    let x = sample_iid_matrix(config.n, config.atom, seed, trial)?;
    let eigs = eigenvalues(&normalized(&x))?;
    let (radial, angular) = circular_law_distance(&eigs)?;
    let mut stats = BTreeMap::new();
    stats.insert("spectral_radius".into(), spectral_radius(&eigs)?);
    stats.insert("ks_radial".into(), radial);
    stats.insert("ks_angular".into(), angular);
    for m in 1..=3 {
        stats.insert(format!("power_norm_ratio_{m}"), power_norm_ratio(&x, m)?);
    }
    Ok(TrialData { eigenvalues: Some(eigs), stats, ..Default::default() })
}

fn column(records: &[&TrialRecord], key: &str) -> Vec<f64> {
    records.iter().filter_map(|r| r.stat(key)).collect()
}

fn fraction(records: &[&TrialRecord], pred: impl Fn(&TrialRecord) -> bool) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| pred(r)).count() as f64 / records.len() as f64
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Empirical `q`-quantile by the nearest-rank rule.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// JSON number, with non-finite values as strings.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

type Summary = (BTreeMap<String, Value>, Vec<Check>);

fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> Summary {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| !r.failed()).collect();
    match config.experiment {
        Experiment::Fig1 | Experiment::Fig3 | Experiment::Fig4 | Experiment::Fig5 => summarize_perturbed(config, &ok),
        Experiment::Clt => summarize_clt(config, &ok),
        Experiment::ZeroRowSum => summarize_zero_row_sum(&ok),
        Experiment::LaurentCompare => summarize_laurent(config, &ok),
        Experiment::GpsCheck => summarize_gps(&ok),
        Experiment::Norms => summarize_norms(&ok),
    }
}

fn summarize_perturbed(config: &ExperimentConfig, ok: &[&TrialRecord]) -> Summary {
    let mut agg = BTreeMap::new();
    let mut checks = Vec::new();
    let counts: Vec<usize> = column(ok, "outlier_count").iter().map(|&c| c as usize).collect();
    agg.insert("outlier_counts".into(), json!(counts));
    if let Ok(m) = outlier_count_moments(&counts, 2) {
        agg.insert("outlier_count_moments".into(), json!(m));
    }
    let agreement = column(ok, "detect_dense_distance");
    let unsearched = ok.iter().filter(|r| r.stat("searched") == Some(0.0)).count();
    agg.insert("unsearched_trials".into(), json!(unsearched));
    agg.insert("max_detect_dense_distance".into(), num(max_of(&agreement)));
    checks.push(Check::new(
        "detect_matches_dense",
        agreement.iter().all(|&d| d <= 1e-6),
        format!(
            "max matching distance {:.3e} over {} searched trials (band 1e-6)",
            max_of(&agreement),
            agreement.len()
        ),
    ));
    let predicted = predictions(config);
    if !predicted.is_empty() {
        let radius = (config.n as f64).powf(-0.25);
        let distances = column(ok, "prediction_distance");
        let hit = |r: &TrialRecord| r.stat("prediction_distance").is_some_and(|d| d <= radius);
        let frac = fraction(ok, hit);
        let band = if config.experiment == Experiment::Fig4 { 0.8 } else { 0.9 };
        agg.insert("prediction_radius".into(), json!(radius));
        agg.insert("max_prediction_distance".into(), num(max_of(&distances)));
        // per-target maximum distance over trials with the predicted count
        let per_target: Vec<Value> = predicted
            .iter()
            .map(|&p| {
                let worst = ok
                    .iter()
                    .filter_map(|r| {
                        let found = r.outliers.as_ref()?.positions();
                        (found.len() == predicted.len()).then(|| found.iter().map(|z| (z - p).norm()).fold(f64::INFINITY, f64::min))
                    })
                    .fold(0.0, f64::max);
                json!({ "target": [p.re, p.im], "max_distance": num(worst) })
            })
            .collect();
        agg.insert("per_target".into(), json!(per_target));
        agg.insert("hit_fraction".into(), json!(frac));
        checks.push(Check::new(
            "predicted_outliers",
            frac >= band,
            format!("{:.0}% of trials with {} outliers within {radius:.4} (band {:.0}%)", 100.0 * frac, predicted.len(), 100.0 * band),
        ));
    }
    if config.experiment == Experiment::Fig3 {
        let bound = 5.0 / (config.n as f64).sqrt();
        let d = column(ok, "eigenvector_distance");
        agg.insert("max_eigenvector_distance".into(), num(max_of(&d)));
        checks.push(Check::new(
            "eigenvector_near_phi",
            d.len() == ok.len() && d.iter().all(|&x| x <= bound),
            format!("{} of {} eigenvectors within {bound:.4}, max {:.4}", d.iter().filter(|&&x| x <= bound).count(), ok.len(), max_of(&d)),
        ));
    }
    (agg, checks)
}

fn summarize_clt(config: &ExperimentConfig, ok: &[&TrialRecord]) -> Summary {
    let mut agg = BTreeMap::new();
    let mut checks = Vec::new();
    for j in 1..=config.j_max {
        let z = column(ok, &format!("z{j}_re"));
        if z.len() < 2 {
            continue;
        }
        let mean = mean_of(&z);
        let var = outlab_core::stats::variance(&z);
        let m4 = z.iter().map(|x| x.powi(4)).sum::<f64>() / z.len() as f64;
        agg.insert(format!("z{j}"), json!({ "mean": mean, "variance": var, "fourth_moment": m4 }));
        checks.push(Check::new(
            &format!("z{j}_gaussian"),
            mean.abs() <= 0.15 && (0.8..=1.2).contains(&var) && (2.2..=3.8).contains(&m4),
            format!("mean {mean:.4}, variance {var:.4}, fourth moment {m4:.4}"),
        ));
    }
    if config.j_max >= 2 {
        let (z1, z2) = (column(ok, "z1_re"), column(ok, "z2_re"));
        if z1.len() >= 2 {
            let rho = outlab_core::stats::correlation(&z1, &z2);
            agg.insert("corr_z1_z2".into(), num(rho));
            checks.push(Check::new("z1_z2_uncorrelated", rho.abs() <= 0.15, format!("correlation {rho:.4}")));
        }
    }
    (agg, checks)
}

fn summarize_zero_row_sum(ok: &[&TrialRecord]) -> Summary {
    let mut agg = BTreeMap::new();
    let radius = column(ok, "spectral_radius");
    let (kr, ka) = (column(ok, "ks_radial"), column(ok, "ks_angular"));
    let inv = column(ok, "invariance_distance");
    agg.insert("spectral_radius".into(), json!({ "min": min_of(&radius), "max": max_of(&radius) }));
    agg.insert("ks_radial_p90".into(), json!(quantile(&kr, 0.9)));
    agg.insert("ks_angular_p90".into(), json!(quantile(&ka, 0.9)));
    agg.insert("max_invariance_distance".into(), num(max_of(&inv)));
    agg.insert("outlier_counts".into(), json!(column(ok, "outlier_count")));
    let checks = vec![
        Check::new(
            "spectral_radius_band",
            radius.iter().all(|r| (0.9..=1.15).contains(r)),
            format!("radius in [{:.4}, {:.4}] (band [0.9, 1.15])", min_of(&radius), max_of(&radius)),
        ),
        ks_check(&kr, &ka),
        Check::new(
            "perturbation_invariance",
            inv.iter().all(|&d| d <= 1e-6),
            format!("max matching distance {:.3e} (band 1e-6)", max_of(&inv)),
        ),
    ];
    (agg, checks)
}

fn ks_check(kr: &[f64], ka: &[f64]) -> Check {
    let (r, a) = (quantile(kr, 0.9), quantile(ka, 0.9));
    Check::new("circular_law_ks", r <= 0.06 && a <= 0.06, format!("90th percentile KS radial {r:.4}, angular {a:.4} (band 0.06)"))
}

fn summarize_norms(ok: &[&TrialRecord]) -> Summary {
    let mut agg = BTreeMap::new();
    let radius = column(ok, "spectral_radius");
    let (kr, ka) = (column(ok, "ks_radial"), column(ok, "ks_angular"));
    agg.insert("spectral_radius".into(), json!({ "min": min_of(&radius), "max": max_of(&radius) }));
    agg.insert("ks_radial_p90".into(), json!(quantile(&kr, 0.9)));
    agg.insert("ks_angular_p90".into(), json!(quantile(&ka, 0.9)));
    let mut ratios = Vec::new();
    for m in 1..=3 {
        let v = column(ok, &format!("power_norm_ratio_{m}"));
        agg.insert(format!("power_norm_ratio_{m}"), json!({ "min": min_of(&v), "max": max_of(&v) }));
        ratios.extend(v);
    }
    let checks = vec![
        Check::new(
            "spectral_radius_band",
            radius.iter().all(|r| (0.9..=1.15).contains(r)),
            format!("radius in [{:.4}, {:.4}] (band [0.9, 1.15])", min_of(&radius), max_of(&radius)),
        ),
        Check::new(
            "power_norm_band",
            ratios.iter().all(|r| (0.8..=1.2).contains(r)),
            format!("ratios in [{:.4}, {:.4}] (band [0.8, 1.2])", min_of(&ratios), max_of(&ratios)),
        ),
        ks_check(&kr, &ka),
    ];
    (agg, checks)
}

/// Statistics comparing model outliers with series zeros in `laurent_compare`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaurentComparison {
    pub model_mean_count: f64,
    pub series_mean_count: f64,
    pub relative_difference: f64,
    pub bin_edges: Vec<f64>,
    pub model_density: Vec<f64>,
    pub model_std_error: Vec<f64>,
    pub series_density: Vec<f64>,
    pub series_std_error: Vec<f64>,
    /// `|difference| / combined standard error` per bin.
    pub bin_z: Vec<f64>,
    pub model_count_moments: Vec<f64>,
    pub series_count_moments: Vec<f64>,
}

pub fn laurent_comparison(r_min: f64, ok: &[&TrialRecord]) -> Result<LaurentComparison, Error> {
    let model: Vec<Vec<C64>> = ok.iter().map(|r| r.outliers.as_ref().map(|o| o.positions()).unwrap_or_default()).collect();
    let series: Vec<Vec<C64>> = ok.iter().flat_map(|r| r.comparison.iter().cloned()).collect();
    let grid = PolarGrid::new(AnnulusRegion::new(r_min, LAURENT_HIST_MAX)?, LAURENT_HIST_BINS, 1)?;
    let m = kpoint_estimate(&model, 1, &grid)?;
    let s = kpoint_estimate(&series, 1, &grid)?;
    let bin_z = (0..grid.len())
        .map(|i| {
            let se = m.std_errors[i].hypot(s.std_errors[i]);
            let d = (m.densities[i] - s.densities[i]).abs();
            if se > 0.0 {
                d / se
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let counts = |sets: &[Vec<C64>]| -> Vec<usize> { sets.iter().map(|z| z.len()).collect() };
    let (mc, sc) = (counts(&model), counts(&series));
    let mean = |c: &[usize]| c.iter().sum::<usize>() as f64 / c.len().max(1) as f64;
    let moments = |c: &[usize]| -> Result<Vec<f64>, Error> { Ok(outlier_count_moments(c, 2)?.iter().map(|e| e.mean).collect()) };
    let (model_mean_count, series_mean_count) = (mean(&mc), mean(&sc));
    Ok(LaurentComparison {
        model_mean_count,
        series_mean_count,
        relative_difference: (model_mean_count - series_mean_count).abs() / series_mean_count,
        bin_edges: grid.radial_edges(),
        model_density: m.densities,
        model_std_error: m.std_errors,
        series_density: s.densities,
        series_std_error: s.std_errors,
        bin_z,
        model_count_moments: moments(&mc)?,
        series_count_moments: moments(&sc)?,
    })
}

fn summarize_laurent(config: &ExperimentConfig, ok: &[&TrialRecord]) -> Summary {
    let mut agg = BTreeMap::new();
    let r_min = 1.0 + 2.0 * config.epsilon;
    let cmp = match laurent_comparison(r_min, ok) {
        Ok(c) => c,
        Err(e) => {
            return (agg, vec![Check::new("laurent_comparison", false, e.to_string())]);
        }
    };
    agg.insert("comparison".into(), serde_json::to_value(&cmp).unwrap_or(Value::Null));
    let worst = max_of(&cmp.bin_z);
    let checks = vec![
        Check::new(
            "mean_count",
            cmp.relative_difference <= 0.2,
            format!(
                "model {:.4} vs series {:.4} ({:.1}% apart, band 20%)",
                cmp.model_mean_count,
                cmp.series_mean_count,
                100.0 * cmp.relative_difference
            ),
        ),
        Check::new("radial_histogram", worst <= 3.0, format!("largest bin difference {worst:.2} combined standard errors (band 3)")),
    ];
    (agg, checks)
}

/// Monte Carlo density at one radius against both kernel formulas.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GpsRow {
    pub radius: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub plain: f64,
    pub squared: f64,
    pub plain_relative_error: f64,
    pub squared_relative_error: f64,
}

pub fn gps_rows(ok: &[&TrialRecord]) -> Vec<GpsRow> {
    GPS_RADII
        .iter()
        .map(|&r| {
            let (a, b) = (r - GPS_HALF_WIDTH, r + GPS_HALF_WIDTH);
            let area = std::f64::consts::PI * (b * b - a * a);
            let counts = column(ok, &format!("annulus_count_{r}"));
            let empirical = mean_of(&counts) / area;
            let std_error = if counts.len() > 1 {
                (outlab_core::stats::variance(&counts) / counts.len() as f64).sqrt() / area
            } else {
                0.0
            };
            let plain = GpsKernel::Plain.annulus_density(a, b);
            let squared = GpsKernel::Squared.annulus_density(a, b);
            GpsRow {
                radius: r,
                empirical,
                std_error,
                plain,
                squared,
                plain_relative_error: (empirical - plain).abs() / plain,
                squared_relative_error: (empirical - squared).abs() / squared,
            }
        })
        .collect()
}

/// Kernels whose density matches at every radius.
pub fn gps_matching_kernels(rows: &[GpsRow]) -> Vec<GpsKernel> {
    let mut out = Vec::new();
    if rows.iter().all(|r| r.plain_relative_error <= GPS_REL_TOL) {
        out.push(GpsKernel::Plain);
    }
    if rows.iter().all(|r| r.squared_relative_error <= GPS_REL_TOL) {
        out.push(GpsKernel::Squared);
    }
    out
}

fn summarize_gps(ok: &[&TrialRecord]) -> Summary {
    let mut agg = BTreeMap::new();
    let rows = gps_rows(ok);
    let matching = gps_matching_kernels(&rows);
    agg.insert("densities".into(), json!(rows));
    agg.insert("matching_kernels".into(), json!(matching.iter().map(|k| k.name()).collect::<Vec<_>>()));
    let detail = match matching.as_slice() {
        [k] => format!("zero density matches the {} at every radius", k.name()),
        [] => "no kernel matches at every radius".to_string(),
        _ => "both kernels match at every radius; the radii do not separate them".to_string(),
    };
    (agg, vec![Check::new("gps_kernel", matching.len() == 1, detail)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;

    fn config(experiment: Experiment, n: usize, trials: usize) -> ExperimentConfig {
        let flags = ConfigFile {
            experiment: Some(experiment),
            n: Some(n),
            trials: Some(trials),
            workers: Some(1),
            ..Default::default()
        };
        ExperimentConfig::resolve(ConfigFile::default(), flags).unwrap()
    }

    #[test]
    fn zero_trials_give_an_empty_summary() {
        let out = run_experiment(&config(Experiment::Fig1, 200, 0)).unwrap();
        assert!(out.records.is_empty());
        assert!(out.summary.aggregates.is_empty() && out.summary.checks.is_empty());
        assert_eq!(out.summary.failure_fraction(), 0.0);
    }

    #[test]
    fn fig3_small_run() {
        let out = run_experiment(&config(Experiment::Fig3, 50, 2)).unwrap();
        for r in &out.records {
            assert!(!r.failed(), "{:?}", r.error);
            assert_eq!(r.stat("outlier_count"), Some(1.0));
            assert!(r.stat("detect_dense_distance").unwrap() < 1e-6);
        }
        assert_eq!(out.predictions.len(), 1);
        assert_eq!(out.summary.trial_seeds.len(), 2);
    }

    #[test]
    fn zero_row_sum_matrix_annihilates_phi() {
        let x = sample_iid_matrix(7, outlab_core::ensembles::AtomDistribution::GaussianReal, SeedPolicy::new(1), 0).unwrap();
        let xp = zero_row_sum_matrix(&x);
        let phi = unit_ones_vector(7).unwrap();
        assert!(xp.matvec(&phi).norm() < 1e-14);
        let p = outlab_core::ensembles::row_sum_projector(7).unwrap();
        assert!(xp.max_abs_diff(&x.matmul(&p).unwrap()) < 1e-14);
    }

    #[test]
    fn quantile_nearest_rank() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quantile(&xs, 0.9), 9.0);
        assert_eq!(quantile(&xs, 1.0), 10.0);
        assert_eq!(quantile(&[3.0], 0.5), 3.0);
    }

    #[test]
    fn predictions_follow_the_captions() {
        let c = config(Experiment::Fig1, 200, 1);
        assert_eq!(predictions(&c), vec![C64::new(2.0, 1.0), C64::new(3.0, 0.0), C64::new(2.0, 0.0)]);
        let c = config(Experiment::Fig4, 1000, 1);
        assert!((predictions(&c)[0] - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!(predictions(&config(Experiment::Fig5, 1000, 1)).is_empty());
    }
}
