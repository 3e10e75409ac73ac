//! Singular values by one-sided (Hestenes) Jacobi rotations.

use super::matrix::{ComplexMatrix, C64};

const MAX_SWEEPS: usize = 60;

/// Singular values in descending order, `min(rows, cols)` of them.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let a = if m.rows() < m.cols() { m.adjoint() } else { m.clone() };
    let (rows, cols) = (a.rows(), a.cols());
    if cols == 0 {
        return Vec::new();
    }
    // columns stored contiguously
    let mut col: Vec<Vec<C64>> = (0..cols).map(|j| (0..rows).map(|i| a[(i, j)]).collect()).collect();
    let mut norms: Vec<f64> = col.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (cp, cq) = pair_mut(&mut col, p, q);
                let gamma: C64 = cp.iter().zip(cq.iter()).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let pc = phase.conj();
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let yq = *y * pc;
                    let xv = *x;
                    *x = xv * c - yq * s;
                    *y = xv * s + yq * c;
                }
                norms[p] = cp.iter().map(|z| z.norm_sqr()).sum();
                norms[q] = cq.iter().map(|z| z.norm_sqr()).sum();
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

fn pair_mut<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (a, b) = v.split_at_mut(q);
    (&mut a[p], &mut b[0])
}

pub fn least_singular_value(m: &ComplexMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}
