//! Dense complex linear algebra built from scratch: LU, Hessenberg reduction,
//! shifted QR eigenvalues, Jacobi singular values and power-iteration norms.

pub mod eigen;
pub mod hessenberg;
pub mod lu;
pub mod matrix;
pub mod norm;
mod scalar;
pub mod svd;

pub use eigen::{eigenvalues, eigenvalues_with, DEFAULT_EIGEN_TOL};
pub use hessenberg::HessenbergForm;
pub use lu::{determinant, lu_factor, LuFactorization};
pub use matrix::{inner, vec_norm, ComplexMatrix, ComplexVector, C64, ONE, ZERO};
pub use norm::{operator_norm, power_norm_scaled, DEFAULT_NORM_TOL};
pub use svd::{least_singular_value, singular_values};

use crate::error::{Error, Result};
use matrix::DenseOperator;

/// `X / sqrt(n)` for an unnormalized iid draw.
pub fn normalized(x: &ComplexMatrix) -> ComplexMatrix {
    x.scale(C64::new(1.0 / (x.rows() as f64).sqrt(), 0.0))
}

/// `(X / sqrt(n) - z I)^{-1} rhs`.
pub fn resolvent_solve(x: &ComplexMatrix, z: C64, rhs: &[C64]) -> Result<ComplexVector> {
    if !x.is_square() || rhs.len() != x.rows() {
        return Err(Error::InvalidDimension(format!(
            "resolvent of a {}x{} matrix against a vector of length {}",
            x.rows(),
            x.cols(),
            rhs.len()
        )));
    }
    let f = lu_factor(&normalized(x).shift_diagonal(z))?;
    if f.is_singular() {
        return Err(Error::ResolventSingular { z });
    }
    f.solve(rhs)
}

/// `<(X / sqrt(n))^m u, v>` by `m` matrix-vector products.
pub fn bilinear_power(x: &ComplexMatrix, m: usize, u: &[C64], v: &[C64]) -> Result<C64> {
    Ok(bilinear_powers(x, m, u, v)?.last().copied().unwrap_or_else(|| inner(u, v)))
}

/// `[<(X/sqrt(n))^j u, v> for j = 1..=m_max]`, sharing the products.
pub fn bilinear_powers(x: &ComplexMatrix, m_max: usize, u: &[C64], v: &[C64]) -> Result<Vec<C64>> {
    let n = x.rows();
    if !x.is_square() || u.len() != n || v.len() != n {
        return Err(Error::InvalidDimension(format!(
            "bilinear form of a {}x{} matrix with vectors of length {} and {}",
            x.rows(),
            x.cols(),
            u.len(),
            v.len()
        )));
    }
    let op = DenseOperator::new(x, 1.0 / (n as f64).sqrt());
    let mut w = u.to_vec();
    let mut tmp = vec![ZERO; n];
    let mut out = Vec::with_capacity(m_max);
    for _ in 0..m_max {
        op.apply(&w, &mut tmp);
        std::mem::swap(&mut w, &mut tmp);
        out.push(inner(&w, v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(n: usize) -> ComplexVector {
        (0..n).map(|_| C64::new(1.0 / (n as f64).sqrt(), 0.0)).collect()
    }

    #[test]
    fn resolvent_of_zero_matrix() {
        let x = ComplexMatrix::zeros(4, 4);
        let r = resolvent_solve(&x, C64::new(2.0, 0.0), &phi(4)).unwrap();
        for (a, b) in r.iter().zip(phi(4).iter()) {
            assert!((a + b / 2.0).norm() < 1e-15);
        }
    }

    #[test]
    fn resolvent_of_identity() {
        let n = 3;
        let x = ComplexMatrix::identity(n).scale(C64::new((n as f64).sqrt(), 0.0));
        let r = resolvent_solve(&x, C64::new(3.0, 0.0), &ComplexVector::basis(n, 0)).unwrap();
        assert!((r[0] + 0.5).norm() < 1e-14);
        assert!(r[1].norm() < 1e-14 && r[2].norm() < 1e-14);
        assert!(matches!(
            resolvent_solve(&x, C64::new(1.0, 0.0), &ComplexVector::basis(n, 0)),
            Err(Error::ResolventSingular { .. })
        ));
    }

    #[test]
    fn bilinear_power_trivial_cases() {
        let n = 5;
        let x = ComplexMatrix::identity(n).scale(C64::new((n as f64).sqrt(), 0.0));
        let e1 = ComplexVector::basis(n, 0);
        assert!((bilinear_power(&x, 3, &e1, &e1).unwrap() - ONE).norm() < 1e-14);
        let z = ComplexMatrix::zeros(n, n);
        assert_eq!(bilinear_power(&z, 1, &phi(n), &e1).unwrap(), ZERO);
        assert!((bilinear_power(&z, 0, &phi(n), &phi(n)).unwrap() - ONE).norm() < 1e-15);
    }
}
