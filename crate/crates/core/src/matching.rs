//! Multiset comparison of complex point sets by bottleneck matching.
//!
//! The matching distance of two equal-size multisets is the smallest `d` for
//! which a perfect pairing exists with every pair within `d` of each other.

use serde::{Deserialize, Serialize};

use crate::linalg::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MatchOutcome {
    /// `pairs[i] = (found index, predicted index)`.
    Matched { pairs: Vec<(usize, usize)>, max_distance: f64 },
    CountMismatch { found: usize, predicted: usize },
}

impl MatchOutcome {
    pub fn max_distance(&self) -> Option<f64> {
        match self {
            MatchOutcome::Matched { max_distance, .. } => Some(*max_distance),
            MatchOutcome::CountMismatch { .. } => None,
        }
    }
}

/// Optimal bottleneck pairing of `found` against `predicted`.
pub fn match_points(found: &[C64], predicted: &[C64]) -> MatchOutcome {
    if found.len() != predicted.len() {
        return MatchOutcome::CountMismatch { found: found.len(), predicted: predicted.len() };
    }
    let n = found.len();
    if n == 0 {
        return MatchOutcome::Matched { pairs: Vec::new(), max_distance: 0.0 };
    }
    let dist: Vec<f64> = found.iter().flat_map(|a| predicted.iter().map(move |b| (a - b).norm())).collect();
    let mut candidates = dist.clone();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    candidates.dedup();

    // the bottleneck value is one of the pair distances; the smallest feasible
    // candidate is found by bisection
    let lower_bound = bottleneck_lower_bound(&dist, n);
    let mut lo = candidates.partition_point(|&d| d < lower_bound);
    let mut hi = candidates.len() - 1;
    let mut best = perfect_matching(&dist, n, candidates[hi]).expect("complete graph has a perfect matching");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching(&dist, n, candidates[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let threshold = candidates[hi];
    if best.iter().enumerate().any(|(i, &j)| dist[i * n + j] > threshold) {
        best = perfect_matching(&dist, n, threshold).expect("feasible threshold");
    }
    let pairs: Vec<(usize, usize)> = best.iter().enumerate().map(|(i, &j)| (i, j)).collect();
    let max_distance = pairs.iter().map(|&(i, j)| dist[i * n + j]).fold(0.0, f64::max);
    MatchOutcome::Matched { pairs, max_distance }
}

/// Matching distance between two multisets, `None` on a count mismatch.
pub fn matching_distance(a: &[C64], b: &[C64]) -> Option<f64> {
    match_points(a, b).max_distance()
}

/// Every row and every column must be matched somewhere.
fn bottleneck_lower_bound(dist: &[f64], n: usize) -> f64 {
    let mut lb: f64 = 0.0;
    for i in 0..n {
        lb = lb.max(dist[i * n..(i + 1) * n].iter().copied().fold(f64::INFINITY, f64::min));
    }
    for j in 0..n {
        lb = lb.max((0..n).map(|i| dist[i * n + j]).fold(f64::INFINITY, f64::min));
    }
    lb
}

/// Perfect matching using only edges with `dist <= threshold` (Kuhn's augmenting paths).
fn perfect_matching(dist: &[f64], n: usize, threshold: f64) -> Option<Vec<usize>> {
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| dist[i * n + j] <= threshold).collect()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &adj, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut out = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        out[o.expect("perfect")] = j;
    }
    Some(out)
}

fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if owner[j].is_none() || augment(owner[j].unwrap(), adj, owner, seen) {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}
