use super::matrix::{ComplexMatrix, ComplexVector, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`, packed in place.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    n: usize,
    lu: Vec<C64>,
    /// `perm[i]` is the row of the input matrix that ended up in row `i`.
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

pub fn lu_factor(m: &ComplexMatrix) -> Result<LuFactorization> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "LU needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut lu = m.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut singular = false;
    // pivots at or below this are treated as exact zeros
    let floor = m.max_abs() * f64::EPSILON * n as f64;

    for k in 0..n {
        let (mut p, mut best) = (k, lu[k * n + k].norm());
        for i in k + 1..n {
            let v = lu[i * n + k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[k * n + k];
        if pivot.norm() <= floor || pivot == ZERO {
            singular = true;
            continue;
        }
        let inv = ONE / pivot;
        let (upper, lower) = lu.split_at_mut((k + 1) * n);
        let pivot_row = &upper[k * n..(k + 1) * n];
        for i in 0..n - k - 1 {
            let row = &mut lower[i * n..(i + 1) * n];
            let l = row[k] * inv;
            row[k] = l;
            if l == ZERO {
                continue;
            }
            for (a, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                *a -= l * u;
            }
        }
    }
    Ok(LuFactorization { n, lu, perm, sign, singular })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn solve(&self, rhs: &[C64]) -> Result<ComplexVector> {
        if self.singular {
            return Err(Error::SingularMatrix);
        }
        if rhs.len() != self.n {
            return Err(Error::InvalidDimension(format!(
                "rhs of length {} for a {}x{} system",
                rhs.len(),
                self.n,
                self.n
            )));
        }
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: C64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: C64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(ComplexVector(x))
    }

    pub fn determinant(&self) -> C64 {
        if self.singular {
            return ZERO;
        }
        let n = self.n;
        (0..n).fold(C64::new(self.sign, 0.0), |acc, i| acc * self.lu[i * n + i])
    }

    pub fn lower(&self) -> ComplexMatrix {
        let n = self.n;
        ComplexMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[i * n + j],
            std::cmp::Ordering::Equal => ONE,
            std::cmp::Ordering::Less => ZERO,
        })
    }

    pub fn upper(&self) -> ComplexMatrix {
        let n = self.n;
        ComplexMatrix::from_fn(n, n, |i, j| if i <= j { self.lu[i * n + j] } else { ZERO })
    }

    /// `P^T L U`, which equals the factored matrix.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let lu = self.lower().matmul(&self.upper()).expect("square factors");
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &p) in self.perm.iter().enumerate() {
            out.row_mut(p).copy_from_slice(lu.row(i));
        }
        out
    }
}

pub fn determinant(m: &ComplexMatrix) -> Result<C64> {
    Ok(lu_factor(m)?.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_has_trivial_pivots() {
        let f = lu_factor(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(f.permutation(), &[0, 1, 2, 3]);
        assert_eq!(f.sign(), 1.0);
        assert_eq!(f.determinant(), c(1.0));
    }

    #[test]
    fn swap_matrix_has_negative_sign() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let f = lu_factor(&m).unwrap();
        assert_eq!(f.sign(), -1.0);
        assert_eq!(f.determinant(), c(-1.0));
    }

    #[test]
    fn diagonal_solve_and_det() {
        let m = ComplexMatrix::from_diag(&[c(2.0), c(4.0)]);
        let f = lu_factor(&m).unwrap();
        let x = f.solve(&[c(2.0), c(4.0)]).unwrap();
        assert_eq!(x.0, vec![c(1.0), c(1.0)]);
        let d = lu_factor(&ComplexMatrix::from_diag(&[c(2.0), c(3.0)])).unwrap().determinant();
        assert_eq!(d, c(6.0));
        let id = lu_factor(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(id.solve(&[c(1.0), c(2.0)]).unwrap().0, vec![c(1.0), c(2.0)]);
    }

    #[test]
    fn singular_is_flagged() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let f = lu_factor(&m).unwrap();
        assert!(f.is_singular());
        assert_eq!(f.determinant(), ZERO);
        assert!(matches!(f.solve(&[c(1.0), c(1.0)]), Err(Error::SingularMatrix)));
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(lu_factor(&ComplexMatrix::zeros(2, 3)), Err(Error::InvalidDimension(_))));
    }
}
