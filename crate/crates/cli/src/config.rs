//! Experiment configuration: per-experiment defaults, JSON files and flag
//! overrides, resolved in that order.

use std::path::{Path, PathBuf};

use outlab_core::ensembles::AtomDistribution;
use outlab_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    /// Fixed low-rank perturbation `diag(2+i, 3, 2)`.
    Fig1,
    /// Mean shift `mu sqrt(n) phi phi^*` with a large outlier.
    Fig3,
    /// Mean shift with `mu sqrt(n) = 2`.
    Fig4,
    /// Excitatory/inhibitory network perturbation.
    Fig5,
    /// Bilinear forms `<(X/sqrt(n))^j phi, phi>`.
    Clt,
    /// `X P / sqrt(n)` with `P` the zero-row-sum projector.
    ZeroRowSum,
    /// Network model outliers against random Laurent series zeros.
    LaurentCompare,
    /// Zero density of Gaussian power series.
    GpsCheck,
    /// Spectral radius and power norms of `X / sqrt(n)`.
    Norms,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Clt => "clt",
            Experiment::ZeroRowSum => "zero_row_sum",
            Experiment::LaurentCompare => "laurent_compare",
            Experiment::GpsCheck => "gps_check",
            Experiment::Norms => "norms",
        }
    }
}

/// Fully resolved configuration, echoed into `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Matrix dimension; truncation order for `gps_check`.
    pub n: usize,
    pub atom: AtomDistribution,
    pub trials: usize,
    pub master_seed: u64,
    pub epsilon: f64,
    pub mu: f64,
    pub p: f64,
    /// Leading diagonal of the perturbation as `[re, im]` pairs (`fig1`).
    pub diag: Vec<[f64; 2]>,
    /// Highest power in the `clt` experiment.
    pub j_max: usize,
    /// Laurent series drawn per trial in `laurent_compare`.
    pub series_per_trial: usize,
    pub out: PathBuf,
    pub emit_svg: bool,
    pub workers: usize,
}

/// A configuration file: any subset of the fields, nothing else.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub n: Option<usize>,
    pub atom: Option<AtomDistribution>,
    pub trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub p: Option<f64>,
    pub diag: Option<Vec<[f64; 2]>>,
    pub j_max: Option<usize>,
    pub series_per_trial: Option<usize>,
    pub out: Option<PathBuf>,
    pub emit_svg: Option<bool>,
    pub workers: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            experiment: other.experiment.or(self.experiment),
            n: other.n.or(self.n),
            atom: other.atom.or(self.atom),
            trials: other.trials.or(self.trials),
            master_seed: other.master_seed.or(self.master_seed),
            epsilon: other.epsilon.or(self.epsilon),
            mu: other.mu.or(self.mu),
            p: other.p.or(self.p),
            diag: other.diag.or(self.diag),
            j_max: other.j_max.or(self.j_max),
            series_per_trial: other.series_per_trial.or(self.series_per_trial),
            out: other.out.or(self.out),
            emit_svg: other.emit_svg.or(self.emit_svg),
            workers: other.workers.or(self.workers),
        }
    }
}

impl From<ExperimentConfig> for ConfigFile {
    fn from(c: ExperimentConfig) -> Self {
        ConfigFile {
            experiment: Some(c.experiment),
            n: Some(c.n),
            atom: Some(c.atom),
            trials: Some(c.trials),
            master_seed: Some(c.master_seed),
            epsilon: Some(c.epsilon),
            mu: Some(c.mu),
            p: Some(c.p),
            diag: Some(c.diag),
            j_max: Some(c.j_max),
            series_per_trial: Some(c.series_per_trial),
            out: Some(c.out),
            emit_svg: Some(c.emit_svg),
            workers: Some(c.workers),
        }
    }
}

/// Workers used when neither the file nor a flag sets them.
pub fn default_workers() -> usize {
    std::env::var("OUTLAB_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&w: &usize| w >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

impl ExperimentConfig {
    /// Defaults for `experiment`, following the corresponding figure where
    /// there is one.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            n: 200,
            atom: AtomDistribution::Rademacher,
            trials: 1,
            master_seed: 0,
            epsilon: 0.1,
            mu: 1.0,
            p: 0.25,
            diag: Vec::new(),
            j_max: 2,
            series_per_trial: 10,
            out: PathBuf::from("out").join(experiment.name()),
            emit_svg: false,
            workers: default_workers(),
        };
        match experiment {
            Experiment::Fig1 => ExperimentConfig { trials: 20, diag: vec![[2.0, 1.0], [3.0, 0.0], [2.0, 0.0]], ..base },
            Experiment::Fig3 => ExperimentConfig { n: 50, trials: 3, mu: 1.0, ..base },
            Experiment::Fig4 => ExperimentConfig { n: 1000, mu: 2.0 / 1000f64.sqrt(), ..base },
            Experiment::Fig5 => ExperimentConfig { n: 1000, mu: 2.0, p: 0.25, ..base },
            Experiment::Clt => ExperimentConfig { n: 2000, trials: 400, ..base },
            Experiment::ZeroRowSum => ExperimentConfig { n: 1000, trials: 10, mu: 10.0, ..base },
            Experiment::LaurentCompare => ExperimentConfig { n: 500, trials: 200, mu: 2.0, epsilon: 0.15, ..base },
            Experiment::GpsCheck => ExperimentConfig { n: 200, trials: 5000, ..base },
            Experiment::Norms => ExperimentConfig { n: 1000, trials: 5, ..base },
        }
    }

    /// Resolves defaults, then `file`, then `flags`, and validates the result.
    pub fn resolve(file: ConfigFile, flags: ConfigFile) -> Result<Self, CliError> {
        let merged = file.overlay(flags);
        let experiment =
            merged.experiment.ok_or_else(|| CliError::Usage("no experiment given (flag or config file)".into()))?;
        let d = Self::defaults(experiment);
        let c = ExperimentConfig {
            experiment,
            n: merged.n.unwrap_or(d.n),
            atom: merged.atom.unwrap_or(d.atom),
            trials: merged.trials.unwrap_or(d.trials),
            master_seed: merged.master_seed.unwrap_or(d.master_seed),
            epsilon: merged.epsilon.unwrap_or(d.epsilon),
            mu: merged.mu.unwrap_or(d.mu),
            p: merged.p.unwrap_or(d.p),
            diag: merged.diag.unwrap_or(d.diag),
            j_max: merged.j_max.unwrap_or(d.j_max),
            series_per_trial: merged.series_per_trial.unwrap_or(d.series_per_trial),
            out: merged.out.unwrap_or(d.out),
            emit_svg: merged.emit_svg.unwrap_or(d.emit_svg),
            workers: merged.workers.unwrap_or(d.workers),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if !(1..=4000).contains(&self.n) {
            return bad(format!("n = {} is outside 1..=4000", self.n));
        }
        if self.trials > 1_000_000 {
            return bad(format!("trials = {} exceeds 1000000", self.trials));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon = {} is outside (0, 1]", self.epsilon));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return bad(format!("mu = {} must be positive", self.mu));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("p = {} is outside (0, 1)", self.p));
        }
        if self.diag.len() > self.n || self.diag.iter().flatten().any(|v| !v.is_finite()) {
            return bad("diag must hold at most n finite entries".into());
        }
        if !(1..=64).contains(&self.j_max) {
            return bad(format!("j_max = {} is outside 1..=64", self.j_max));
        }
        if !(1..=1000).contains(&self.series_per_trial) {
            return bad(format!("series_per_trial = {} is outside 1..=1000", self.series_per_trial));
        }
        if !(1..=1024).contains(&self.workers) {
            return bad(format!("workers = {} is outside 1..=1024", self.workers));
        }
        if self.experiment == Experiment::GpsCheck && self.n < 50 {
            return bad("gps_check needs a truncation order n >= 50".into());
        }
        Ok(())
    }

    pub fn diag_entries(&self) -> Vec<C64> {
        self.diag.iter().map(|&[re, im]| C64::new(re, im)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ConfigFile::parse(r#"{"experiment": "fig1", "colour": 3}"#).is_err());
        assert!(ConfigFile::parse(r#"{"experiment": "fig9"}"#).is_err());
        let ok = ConfigFile::parse(r#"{"experiment": "fig3", "n": 60, "atom": "gaussian_real"}"#).unwrap();
        assert_eq!(ok.n, Some(60));
    }

    #[test]
    fn flags_override_file_and_defaults_fill_the_rest() {
        let file = ConfigFile::parse(r#"{"experiment": "fig1", "trials": 5, "master_seed": 9}"#).unwrap();
        let flags = ConfigFile { trials: Some(7), workers: Some(2), ..Default::default() };
        let c = ExperimentConfig::resolve(file, flags).unwrap();
        assert_eq!((c.trials, c.master_seed, c.n, c.workers), (7, 9, 200, 2));
        assert_eq!(c.diag_entries(), vec![C64::new(2.0, 1.0), C64::new(3.0, 0.0), C64::new(2.0, 0.0)]);
    }

    #[test]
    fn echo_round_trips() {
        let c = ExperimentConfig::defaults(Experiment::Fig5);
        let text = serde_json::to_string(&c).unwrap();
        let back = ExperimentConfig::resolve(ConfigFile::parse(&text).unwrap(), ConfigFile::default()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ranges_are_checked() {
        let flags = ConfigFile { experiment: Some(Experiment::Fig5), p: Some(1.5), ..Default::default() };
        assert!(matches!(ExperimentConfig::resolve(ConfigFile::default(), flags), Err(CliError::Usage(_))));
        assert!(ExperimentConfig::resolve(ConfigFile::default(), ConfigFile::default()).is_err());
    }
}
