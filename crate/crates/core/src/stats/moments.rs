//! Bilinear-form CLT samples and moment estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_iid_matrix, AtomDistribution};
use crate::error::{Error, Result};
use crate::linalg::{bilinear_powers, vec_norm, C64};
use crate::rng::SeedPolicy;

/// Power sums `sum x^p`, `p = 0..=max_order`, merged by addition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    pub sums: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(max_order: usize) -> Self {
        Self { sums: vec![0.0; max_order + 1] }
    }

    pub fn push(&mut self, x: f64) {
        let mut p = 1.0;
        for s in self.sums.iter_mut() {
            *s += p;
            p *= x;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.sums.len(), other.sums.len(), "accumulators of different orders");
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
    }

    pub fn count(&self) -> f64 {
        self.sums[0]
    }

    /// `mean(x^p)`, or 0 for an empty accumulator.
    pub fn raw_moment(&self, p: usize) -> f64 {
        if self.count() == 0.0 {
            0.0
        } else {
            self.sums[p] / self.count()
        }
    }
}

impl FromIterator<f64> for MomentAccumulator {
    /// Accumulates up to order 4.
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new(4);
        iter.into_iter().for_each(|x| acc.push(x));
        acc
    }
}

/// `Z_j = sqrt(n) <(X/sqrt(n))^j u, v>` for `j = 1..=j_max`, one row per trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltSampleSet {
    pub n: usize,
    pub atom: AtomDistribution,
    pub j_max: usize,
    pub samples: Vec<Vec<C64>>,
}

impl CltSampleSet {
    /// Real parts of `Z_j` across trials (`j` from 1).
    pub fn real_column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|row| row[j - 1].re).collect()
    }
}

fn check_delocalized(name: &str, w: &[C64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidDimension(format!("{name} has length {}, expected {n}", w.len())));
    }
    if (vec_norm(w) - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("{name} is not a unit vector")));
    }
    let bound = 10.0 / (n as f64).sqrt();
    let sup = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if sup > bound {
        return Err(Error::Precondition(format!("{name} is not delocalized: sup {sup} > 10/sqrt(n) = {bound}")));
    }
    Ok(())
}

/// Samples over trials `0..n_trials`, one fresh matrix per trial.
#[allow(clippy::too_many_arguments)]
pub fn clt_samples(
    n: usize,
    atom: AtomDistribution,
    j_max: usize,
    u: &[C64],
    v: &[C64],
    n_trials: usize,
    seed: SeedPolicy,
) -> Result<CltSampleSet> {
    check_delocalized("u", u, n)?;
    check_delocalized("v", v, n)?;
    let scale = (n as f64).sqrt();
    let samples = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let x = sample_iid_matrix(n, atom, seed, trial)?;
            Ok(bilinear_powers(&x, j_max, u, v)?.into_iter().map(|z| z * scale).collect())
        })
        .collect::<Result<Vec<Vec<C64>>>>()?;
    Ok(CltSampleSet { n, atom, j_max, samples })
}

/// `(r - 1)!!` for even `r`, i.e. `E G^r` for standard Gaussian `G`.
pub fn gaussian_moment(r: usize) -> f64 {
    if r % 2 == 1 {
        return 0.0;
    }
    (1..r).step_by(2).map(|k| k as f64).product()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTest {
    pub empirical: f64,
    pub target: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Compares `mean(x^r)` with `E G^r = r! / (2^{r/2} (r/2)!)`. The standard
/// error is that of the estimator under the Gaussian hypothesis,
/// `sqrt((E G^{2r} - (E G^r)^2) / N)`.
pub fn gaussian_moment_test(samples: &[f64], r: usize) -> Result<MomentTest> {
    if r == 0 || r % 2 == 1 {
        return Err(Error::InvalidParameter(format!("moment order must be even and positive, got {r}")));
    }
    if samples.len() < 30 {
        return Err(Error::InvalidParameter(format!("need at least 30 samples, got {}", samples.len())));
    }
    let n = samples.len() as f64;
    let empirical = samples.iter().map(|x| x.powi(r as i32)).sum::<f64>() / n;
    let target = gaussian_moment(r);
    let std_error = ((gaussian_moment(2 * r) - target * target) / n).sqrt();
    Ok(MomentTest { empirical, target, std_error, z_score: (empirical - target) / std_error })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// `E[N^m]` for `m = 1..=m_max` with standard errors `sd(N^m) / sqrt(trials)`.
pub fn outlier_count_moments(counts: &[usize], m_max: usize) -> Result<Vec<MomentEstimate>> {
    if m_max == 0 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    let t = counts.len() as f64;
    Ok((1..=m_max)
        .map(|m| {
            if counts.is_empty() {
                return MomentEstimate { order: m, mean: 0.0, std_error: 0.0 };
            }
            let vals: Vec<f64> = counts.iter().map(|&c| (c as f64).powi(m as i32)).collect();
            let mean = vals.iter().sum::<f64>() / t;
            let var = if counts.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0)
            } else {
                0.0
            };
            MomentEstimate { order: m, mean, std_error: (var / t).sqrt() }
        })
        .collect())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (sx * sy).sqrt()
}
