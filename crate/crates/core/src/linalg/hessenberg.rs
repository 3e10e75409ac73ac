//! Diagonal balancing and Householder reduction to upper Hessenberg form.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use super::scalar::Scalar;
use crate::error::{Error, Result};

const RADIX: f64 = 2.0;

/// Diagonal similarity scaling `D^{-1} A D` with powers of two, so that row
/// and column norms of each index are comparable. Leaves the spectrum intact.
pub(crate) fn balance<T: Scalar>(a: &mut [T], n: usize) {
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    let mut passes = 0;
    while !done && passes < 200 {
        done = true;
        passes += 1;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs1();
                    r += a[i * n + j].abs1();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i * n + j] = a[i * n + j].scale(g);
                }
                for j in 0..n {
                    a[j * n + i] = a[j * n + i].scale(f);
                }
            }
        }
    }
}

struct Reflector<T> {
    /// First index the reflector acts on.
    offset: usize,
    v: Vec<T>,
    beta: f64,
}

impl<T: Scalar> Reflector<T> {
    /// `x <- (I - beta v v^*) x` on the trailing block of `x`.
    fn apply(&self, x: &mut [T]) {
        let tail = &mut x[self.offset..];
        let mut s = T::ZERO;
        for (vi, xi) in self.v.iter().zip(tail.iter()) {
            s += vi.conj() * *xi;
        }
        let s = s.scale(self.beta);
        for (vi, xi) in self.v.iter().zip(tail.iter_mut()) {
            *xi -= *vi * s;
        }
    }
}

/// `A = Q H Q^*` with `H` upper Hessenberg and `Q` a product of reflectors.
pub(crate) struct Hessenberg<T> {
    pub(crate) n: usize,
    pub(crate) h: Vec<T>,
    reflectors: Vec<Reflector<T>>,
}

pub(crate) fn reduce<T: Scalar>(mut a: Vec<T>, n: usize, keep_q: bool) -> Hessenberg<T> {
    let mut reflectors = Vec::new();
    let mut w = vec![T::ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<T> = (0..len).map(|i| a[(k + 1 + i) * n + k]).collect();
        let alpha = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let tail = v[1..].iter().map(|x| x.norm_sqr()).sum::<f64>();
        if alpha == 0.0 || tail == 0.0 {
            continue;
        }
        let phase = v[0].phase();
        v[0] += phase.scale(alpha);
        let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        let beta = 2.0 / vnorm2;

        // left: rows k+1.., columns k..
        for x in w[k..].iter_mut() {
            *x = T::ZERO;
        }
        for (i, vi) in v.iter().enumerate() {
            let vc = vi.conj();
            let row = &a[(k + 1 + i) * n..(k + 2 + i) * n];
            for (wj, &aij) in w[k..].iter_mut().zip(&row[k..]) {
                *wj += vc * aij;
            }
        }
        for (i, vi) in v.iter().enumerate() {
            let s = vi.scale(beta);
            let row = &mut a[(k + 1 + i) * n..(k + 2 + i) * n];
            for (aij, &wj) in row[k..].iter_mut().zip(&w[k..]) {
                *aij -= s * wj;
            }
        }
        // right: all rows, columns k+1..
        for r in 0..n {
            let row = &mut a[r * n + k + 1..(r + 1) * n];
            let mut s = T::ZERO;
            for (x, vi) in row.iter().zip(&v) {
                s += *x * *vi;
            }
            let s = s.scale(beta);
            for (x, vi) in row.iter_mut().zip(&v) {
                *x -= s * vi.conj();
            }
        }
        a[(k + 1) * n + k] = -phase.scale(alpha);
        for i in k + 2..n {
            a[i * n + k] = T::ZERO;
        }
        if keep_q {
            reflectors.push(Reflector { offset: k + 1, v, beta });
        }
    }
    Hessenberg { n, h: a, reflectors }
}

impl<T: Scalar> Hessenberg<T> {
    /// `x <- Q^* x`.
    pub(crate) fn apply_q_adjoint(&self, x: &mut [T]) {
        for r in &self.reflectors {
            r.apply(x);
        }
    }

    /// `x <- Q x`.
    pub(crate) fn apply_q(&self, x: &mut [T]) {
        for r in self.reflectors.iter().rev() {
            r.apply(x);
        }
    }
}

/// Hessenberg form of a complex square matrix, keeping `Q`, for repeated
/// shifted solves `(A - z I)^{-1} b` at `O(n^2)` each.
pub struct HessenbergForm {
    inner: Hessenberg<C64>,
    max_abs: f64,
}

impl HessenbergForm {
    pub fn new(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidDimension(format!(
                "Hessenberg reduction needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let inner = reduce(m.as_slice().to_vec(), n, true);
        let max_abs = inner.h.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        Ok(Self { inner, max_abs })
    }

    pub fn dim(&self) -> usize {
        self.inner.n
    }

    /// The Hessenberg factor `H` as a dense matrix.
    pub fn h(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(self.inner.n, self.inner.n, self.inner.h.clone()).expect("n x n")
    }

    pub fn apply_q_adjoint(&self, x: &mut [C64]) {
        self.inner.apply_q_adjoint(x)
    }

    pub fn apply_q(&self, x: &mut [C64]) {
        self.inner.apply_q(x)
    }

    /// Solves `(H - z I) Y = R` in place for every column in `rhs` (each given
    /// in the Hessenberg basis). Returns `det(H - z I)`.
    pub fn shifted_solve(&self, z: C64, rhs: &mut [Vec<C64>]) -> Result<C64> {
        let n = self.inner.n;
        let mut w = self.inner.h.clone();
        for i in 0..n {
            w[i * n + i] -= z;
        }
        let floor = (self.max_abs + z.norm()) * f64::EPSILON * n as f64;
        let mut det = ONE;
        for k in 0..n {
            if k + 1 < n && w[(k + 1) * n + k].norm() > w[k * n + k].norm() {
                let (top, bottom) = w.split_at_mut((k + 1) * n);
                top[k * n + k..(k + 1) * n].swap_with_slice(&mut bottom[k..n]);
                for b in rhs.iter_mut() {
                    b.swap(k, k + 1);
                }
                det = -det;
            }
            let pivot = w[k * n + k];
            if pivot.norm() <= floor {
                return Err(Error::ResolventSingular { z });
            }
            det *= pivot;
            if k + 1 < n {
                let l = w[(k + 1) * n + k] / pivot;
                if l != ZERO {
                    let (top, bottom) = w.split_at_mut((k + 1) * n);
                    let prow = &top[k * n..(k + 1) * n];
                    for (x, &u) in bottom[k + 1..n].iter_mut().zip(&prow[k + 1..]) {
                        *x -= l * u;
                    }
                    for b in rhs.iter_mut() {
                        let bk = b[k];
                        b[k + 1] -= l * bk;
                    }
                }
            }
        }
        for b in rhs.iter_mut() {
            for i in (0..n).rev() {
                let row = &w[i * n..(i + 1) * n];
                let s: C64 = row[i + 1..].iter().zip(&b[i + 1..]).map(|(u, y)| u * y).sum();
                b[i] = (b[i] - s) / row[i];
            }
        }
        Ok(det)
    }
}
