//! One- and two-point correlation functions of point processes in an annulus.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::outlier::AnnulusRegion;

/// Polar grid over an annulus: `radial_bins` equal radial widths times
/// `angular_bins` equal angles starting at `arg = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub region: AnnulusRegion,
    pub radial_bins: usize,
    pub angular_bins: usize,
}

impl PolarGrid {
    pub fn new(region: AnnulusRegion, radial_bins: usize, angular_bins: usize) -> Result<Self> {
        if radial_bins == 0 || angular_bins == 0 {
            return Err(Error::InvalidParameter("polar grid needs at least one bin per axis".into()));
        }
        Ok(Self { region, radial_bins, angular_bins })
    }

    pub fn len(&self) -> usize {
        self.radial_bins * self.angular_bins
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radial_edges(&self) -> Vec<f64> {
        let (a, b) = (self.region.r_min, self.region.r_max);
        (0..=self.radial_bins).map(|i| a + (b - a) * i as f64 / self.radial_bins as f64).collect()
    }

    /// Cell index `radial * angular_bins + angular`, with radii half-open `[lo, hi)`.
    pub fn cell(&self, z: C64) -> Option<usize> {
        let (a, b) = (self.region.r_min, self.region.r_max);
        let r = z.norm();
        if !(r >= a && r < b) {
            return None;
        }
        let i = (((r - a) / (b - a)) * self.radial_bins as f64).floor() as usize;
        let t = z.arg().rem_euclid(TAU);
        let j = ((t / TAU) * self.angular_bins as f64).floor() as usize;
        Some(i.min(self.radial_bins - 1) * self.angular_bins + j.min(self.angular_bins - 1))
    }

    pub fn area(&self, cell: usize) -> f64 {
        let e = self.radial_edges();
        let i = cell / self.angular_bins;
        PI * (e[i + 1].powi(2) - e[i].powi(2)) / self.angular_bins as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub k: usize,
    pub grid: PolarGrid,
    /// For `k = 1` one entry per cell; for `k = 2` one per ordered pair of cells
    /// (`c1 * cells + c2`).
    pub densities: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_trials: usize,
}

/// Estimates the `k`-point function (`k` in `{1, 2}`) of the process whose
/// realizations are `per_trial`. For `k = 2` the ordered pairs of distinct
/// points are counted and halved, following the `1/k!` normalization.
pub fn kpoint_estimate(per_trial: &[Vec<C64>], k: usize, grid: &PolarGrid) -> Result<CorrelationEstimate> {
    if !(k == 1 || k == 2) {
        return Err(Error::InvalidParameter(format!("only k = 1, 2 are supported, got {k}")));
    }
    let cells = grid.len();
    let slots = if k == 1 { cells } else { cells * cells };
    let weights: Vec<f64> = (0..slots)
        .map(|s| {
            if k == 1 {
                1.0 / grid.area(s)
            } else {
                0.5 / (grid.area(s / cells) * grid.area(s % cells))
            }
        })
        .collect();
    let mut sum = vec![0.0; slots];
    let mut sum_sq = vec![0.0; slots];
    for points in per_trial {
        let idx: Vec<usize> = points.iter().filter_map(|&z| grid.cell(z)).collect();
        let mut counts = vec![0.0; slots];
        if k == 1 {
            idx.iter().for_each(|&c| counts[c] += 1.0);
        } else {
            for (a, &ca) in idx.iter().enumerate() {
                for (b, &cb) in idx.iter().enumerate() {
                    if a != b {
                        counts[ca * cells + cb] += 1.0;
                    }
                }
            }
        }
        for s in 0..slots {
            let v = counts[s] * weights[s];
            sum[s] += v;
            sum_sq[s] += v * v;
        }
    }
    let t = per_trial.len() as f64;
    let (densities, std_errors) = if per_trial.is_empty() {
        (vec![0.0; slots], vec![0.0; slots])
    } else {
        sum.iter()
            .zip(&sum_sq)
            .map(|(&s, &q)| {
                let m = s / t;
                let var = if t > 1.0 { ((q - t * m * m) / (t - 1.0)).max(0.0) } else { 0.0 };
                (m, (var / t).sqrt())
            })
            .unzip()
    };
    Ok(CorrelationEstimate { k, grid: grid.clone(), densities, std_errors, n_trials: per_trial.len() })
}
