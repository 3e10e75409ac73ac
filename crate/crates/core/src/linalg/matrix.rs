use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidDimension(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// `self - z I`.
    pub fn shift_diagonal(&self, z: C64) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m.data[i * self.cols + i] -= z;
        }
        m
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::InvalidDimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[C64]) -> ComplexVector {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut out = vec![ZERO; self.rows];
        self.matvec_into(x, &mut out);
        ComplexVector(out)
    }

    pub fn matvec_into(&self, x: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `self^* x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> ComplexVector {
        assert_eq!(x.len(), self.rows, "adjoint matvec dimension mismatch");
        let mut out = vec![ZERO; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        ComplexVector(out)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::InvalidDimension(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Complex column vector. Inner products are linear in the first argument:
/// `<x, y> = sum_i x_i conj(y_i)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexVector(pub Vec<C64>);

impl ComplexVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![ZERO; n])
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = ONE;
        v
    }

    pub fn from_real(xs: &[f64]) -> Self {
        xs.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &[C64]) -> C64 {
        inner(&self.0, other)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.0.iter().map(|z| z / n).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        self.0.iter().map(|z| z * s).collect()
    }

    pub fn sub(&self, other: &[C64]) -> Self {
        self.0.iter().zip(other).map(|(a, b)| a - b).collect()
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }
}

impl Deref for ComplexVector {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl FromIterator<C64> for ComplexVector {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl From<Vec<C64>> for ComplexVector {
    fn from(v: Vec<C64>) -> Self {
        Self(v)
    }
}

#[inline]
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Square matrix used as a linear operator in long matvec chains. Real inputs
/// are stored as `f64`, halving the work of each product.
pub(crate) enum DenseOperator<'a> {
    Real { n: usize, data: Vec<f64>, scale: f64 },
    Complex { m: &'a ComplexMatrix, scale: f64 },
}

impl<'a> DenseOperator<'a> {
    /// Operator `scale * m`.
    pub(crate) fn new(m: &'a ComplexMatrix, scale: f64) -> Self {
        if m.is_real() {
            DenseOperator::Real { n: m.cols(), data: m.as_slice().iter().map(|z| z.re).collect(), scale }
        } else {
            DenseOperator::Complex { m, scale }
        }
    }

    pub(crate) fn apply(&self, x: &[C64], out: &mut [C64]) {
        match self {
            DenseOperator::Real { n, data, scale } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &data[i * n..(i + 1) * n];
                    let (mut re, mut im) = (0.0, 0.0);
                    for (a, b) in row.iter().zip(x) {
                        re += a * b.re;
                        im += a * b.im;
                    }
                    *o = C64::new(re * scale, im * scale);
                }
            }
            DenseOperator::Complex { m, scale } => {
                m.matvec_into(x, out);
                for o in out.iter_mut() {
                    *o *= scale;
                }
            }
        }
    }

    pub(crate) fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        match self {
            DenseOperator::Real { n, data, scale } => {
                out.iter_mut().for_each(|o| *o = ZERO);
                for (i, &xi) in x.iter().enumerate() {
                    let row = &data[i * n..(i + 1) * n];
                    let s = xi * *scale;
                    for (o, &a) in out.iter_mut().zip(row) {
                        *o += s * a;
                    }
                }
            }
            DenseOperator::Complex { m, scale } => {
                let y = m.adjoint_matvec(x);
                for (o, v) in out.iter_mut().zip(y.iter()) {
                    *o = v * *scale;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_adjoint() {
        let a = ComplexMatrix::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64));
        let b = a.adjoint();
        let p = a.matmul(&b).unwrap();
        assert_eq!(p.rows(), 2);
        // (a a*) is Hermitian
        assert!((p[(0, 1)] - p[(1, 0)].conj()).norm() < 1e-14);
        let x = ComplexVector::from_real(&[1.0, 2.0, 3.0]);
        let y = a.matvec(&x);
        assert!((y[1] - C64::new(6.0, 8.0)).norm() < 1e-14);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn dense_operator_matches_matvec() {
        let a = ComplexMatrix::from_fn(4, 4, |i, j| C64::new((i * 4 + j) as f64 - 7.0, 0.0));
        let op = DenseOperator::new(&a, 0.5);
        let x: ComplexVector = (0..4).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        let mut out = vec![ZERO; 4];
        op.apply(&x, &mut out);
        let want = a.matvec(&x).scale(C64::new(0.5, 0.0));
        assert!(out.iter().zip(want.iter()).all(|(a, b)| (a - b).norm() < 1e-13));
        op.apply_adjoint(&x, &mut out);
        let want = a.adjoint_matvec(&x).scale(C64::new(0.5, 0.0));
        assert!(out.iter().zip(want.iter()).all(|(a, b)| (a - b).norm() < 1e-13));
    }
}
