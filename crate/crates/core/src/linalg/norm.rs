//! Operator norms by power iteration, including norms of matrix powers that
//! are never formed explicitly.

use super::matrix::{vec_norm, ComplexMatrix, DenseOperator, C64, ZERO};
use crate::rng::SplitMix64;

pub const DEFAULT_NORM_TOL: f64 = 1e-10;
const MAX_POWER_ITERATIONS: usize = 20_000;

/// Deterministic unit start vector with no special alignment.
fn start_vector(n: usize) -> Vec<C64> {
    let mut rng = SplitMix64::new(0x5eed_0f_9041_u64);
    let v: Vec<C64> = (0..n).map(|_| C64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5)).collect();
    let nrm = vec_norm(&v);
    v.into_iter().map(|z| z / nrm).collect()
}

/// Largest singular value of `M` to relative accuracy `tol` (power iteration on `M^* M`).
pub fn operator_norm(m: &ComplexMatrix, tol: f64) -> f64 {
    power_norm_scaled(m, 1.0, 1, tol, MAX_POWER_ITERATIONS)
}

/// `|| (scale * M)^power ||_op` by power iteration, never materializing the power.
pub fn power_norm_scaled(m: &ComplexMatrix, scale: f64, power: usize, tol: f64, max_iter: usize) -> f64 {
    assert!(m.is_square(), "power norm needs a square matrix");
    let n = m.rows();
    if n == 0 {
        return 0.0;
    }
    if power == 0 {
        return 1.0;
    }
    let op = DenseOperator::new(m, scale);
    let mut x = start_vector(n);
    let mut tmp = vec![ZERO; n];
    let mut prev = 0.0;
    let mut prev_step = f64::INFINITY;
    let mut estimate = 0.0;
    for _ in 0..max_iter.max(1) {
        // y = A x with A = (scale M)^power
        for _ in 0..power {
            op.apply(&x, &mut tmp);
            std::mem::swap(&mut x, &mut tmp);
        }
        let ax = vec_norm(&x);
        if ax == 0.0 {
            return 0.0;
        }
        for _ in 0..power {
            op.apply_adjoint(&x, &mut tmp);
            std::mem::swap(&mut x, &mut tmp);
        }
        let aax = vec_norm(&x);
        // |A^* A x| / |A x| is a lower bound on the norm, monotone in the iteration
        estimate = aax / ax;
        for z in x.iter_mut() {
            *z /= aax;
        }
        // the estimate rises geometrically with ratio q, leaving about
        // step * q / (1 - q) to go
        let step = (estimate - prev).abs();
        let q = step / prev_step;
        let remaining = if q < 1.0 { step * (q / (1.0 - q)).max(1.0) } else { f64::INFINITY };
        if step == 0.0 || remaining <= tol * estimate {
            break;
        }
        prev = estimate;
        prev_step = step;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        assert!((operator_norm(&ComplexMatrix::identity(4), 1e-12) - 1.0).abs() < 1e-12);
        let d = ComplexMatrix::from_diag(&[C64::new(3.0, 0.0), C64::new(-5.0, 0.0)]);
        assert!((operator_norm(&d, 1e-12) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn powers_of_nilpotent_vanish() {
        let j = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!((power_norm_scaled(&j, 2.0, 1, 1e-12, 100) - 2.0).abs() < 1e-12);
        assert_eq!(power_norm_scaled(&j, 1.0, 2, 1e-12, 100), 0.0);
    }
}
