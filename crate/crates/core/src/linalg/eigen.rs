//! Nonsymmetric eigenvalues: balancing, Householder Hessenberg reduction and
//! shifted QR iteration with deflation.
//!
//! Complex input runs single-shift QR with the Wilkinson shift. Real input
//! runs the Francis double-shift iteration in real arithmetic, which finds the
//! same spectrum at roughly a quarter of the cost.

use super::hessenberg::{balance, reduce};
use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Post-condition tolerance: each returned `l` has `sigma_min(M - l I) <= tol * |M|_F`.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
/// Sweeps allowed per unit of dimension.
pub const SWEEPS_PER_DIM: usize = 30;
/// Stagnant sweeps between exceptional shifts.
const EXCEPTIONAL_PERIOD: usize = 10;

pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    eigenvalues_with(m, DEFAULT_EIGEN_TOL, SWEEPS_PER_DIM * m.rows().max(1))
}

/// Eigenvalues (with multiplicity) of a square matrix. Subdiagonal entries are
/// deflated once they are negligible relative to their diagonal neighbours,
/// or below `1e-6 * tol * |H|_F`.
pub fn eigenvalues_with(m: &ComplexMatrix, tol: f64, max_sweeps: usize) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.is_real() {
        let mut a: Vec<f64> = m.as_slice().iter().map(|z| z.re).collect();
        balance(&mut a, n);
        let h = reduce(a, n, false);
        real_hessenberg_eigenvalues(h.h, n, tol, max_sweeps)
    } else {
        let mut a = m.as_slice().to_vec();
        balance(&mut a, n);
        let h = reduce(a, n, false);
        complex_hessenberg_eigenvalues(h.h, n, tol, max_sweeps)
    }
}

fn floor_for(h: &[C64], tol: f64) -> f64 {
    1e-6 * tol * h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Wilkinson shift: eigenvalue of the trailing 2x2 block closest to `d`.
fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let (l1, l2) = ((a + d) * 0.5 + disc, (a + d) * 0.5 - disc);
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

pub(crate) fn complex_hessenberg_eigenvalues(
    mut h: Vec<C64>,
    n: usize,
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<C64>> {
    let floor = floor_for(&h, tol);
    let mut out = vec![ZERO; n];
    let mut found = Vec::new();
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut stagnant = 0usize;
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(n);
    let idx = |i: usize, j: usize| i * n + j;

    loop {
        // deflation search
        let mut lo = hi;
        while lo > 0 {
            let s = h[idx(lo - 1, lo - 1)].norm() + h[idx(lo, lo)].norm();
            let sub = h[idx(lo, lo - 1)].norm();
            if sub <= f64::EPSILON * s || sub <= floor {
                h[idx(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out[hi] = h[idx(hi, hi)];
            found.push(out[hi]);
            stagnant = 0;
            if hi == 0 {
                break;
            }
            hi -= 1;
            continue;
        }
        if sweeps >= max_sweeps {
            return Err(Error::Convergence { sweeps, found });
        }
        sweeps += 1;
        stagnant += 1;

        let mu = if stagnant % EXCEPTIONAL_PERIOD == 0 {
            let s = h[idx(hi, hi - 1)].norm() + if hi >= 2 { h[idx(hi - 1, hi - 2)].norm() } else { 0.0 };
            h[idx(hi, hi)] + C64::new(0.75 * s, 0.4375 * s)
        } else {
            wilkinson(h[idx(hi - 1, hi - 1)], h[idx(hi - 1, hi)], h[idx(hi, hi - 1)], h[idx(hi, hi)])
        };

        // explicit shifted QR step on the active block [lo, hi]
        for i in lo..=hi {
            h[idx(i, i)] -= mu;
        }
        rots.clear();
        for k in lo..hi {
            let a = h[idx(k, k)];
            let b = h[idx(k + 1, k)];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (1.0, ZERO)
            } else {
                // G = [[c, s], [-conj(s), c]] with c real maps (a, b) to (r', 0)
                let c = a.norm() / r;
                let phase = if a.norm() == 0.0 { C64::new(1.0, 0.0) } else { a / a.norm() };
                let s = phase * b.conj() / r;
                (c, s)
            };
            rots.push((c, s));
            let (top, bottom) = h.split_at_mut((k + 1) * n);
            let rk = &mut top[k * n + k..k * n + hi + 1];
            let rk1 = &mut bottom[k..hi + 1];
            for (x, y) in rk.iter_mut().zip(rk1.iter_mut()) {
                let (xv, yv) = (*x, *y);
                *x = xv * c + s * yv;
                *y = -s.conj() * xv + yv * c;
            }
        }
        for (off, &(c, s)) in rots.iter().enumerate() {
            let k = lo + off;
            let last = (k + 2).min(hi);
            for i in lo..=last {
                let xv = h[idx(i, k)];
                let yv = h[idx(i, k + 1)];
                h[idx(i, k)] = xv * c + yv * s.conj();
                h[idx(i, k + 1)] = -xv * s + yv * c;
            }
        }
        for i in lo..=hi {
            h[idx(i, i)] += mu;
        }
    }
    Ok(out)
}

/// Francis double-shift QR on a real upper Hessenberg matrix (eigenvalues only).
pub(crate) fn real_hessenberg_eigenvalues(
    mut a: Vec<f64>,
    n: usize,
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<C64>> {
    let idx = |i: usize, j: usize| i * n + j;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[idx(i, j)].abs();
        }
    }
    let floor = 1e-6 * tol * a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut found = Vec::new();
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let mut sweeps = 0usize;

    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 1 {
                let mut s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                let sub = a[idx(l, l - 1)].abs();
                if sub + s == s || sub <= floor {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[idx(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                found.push(C64::new(wr[nu], 0.0));
                nn -= 1;
                break;
            }
            let mut y = a[idx(nu - 1, nu - 1)];
            let mut w = a[idx(nu, nu - 1)] * a[idx(nu - 1, nu)];
            if l + 1 == nu {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                found.push(C64::new(wr[nu - 1], wi[nu - 1]));
                found.push(C64::new(wr[nu], wi[nu]));
                nn -= 2;
                break;
            }
            if sweeps >= max_sweeps {
                return Err(Error::Convergence { sweeps, found });
            }
            if its > 0 && its % EXCEPTIONAL_PERIOD == 0 {
                t += x;
                for i in 0..=nu {
                    a[idx(i, i)] -= x;
                }
                let s = a[idx(nu, nu - 1)].abs() + a[idx(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            sweeps += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                q = a[idx(m + 1, m + 1)] - z - rr - ss;
                r = a[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[idx(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[idx(i, i - 3)] = 0.0;
                }
            }
            // double-shift QR step on rows l..=nu and columns m..=nu
            let mut k = m;
            while k + 1 <= nu {
                if k != m {
                    p = a[idx(k, k - 1)];
                    q = a[idx(k + 1, k - 1)];
                    r = if k + 1 != nu { a[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                        }
                    } else {
                        a[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
                        if k + 1 != nu {
                            pp += r * a[idx(k + 2, j)];
                            a[idx(k + 2, j)] -= pp * z;
                        }
                        a[idx(k + 1, j)] -= pp * y;
                        a[idx(k, j)] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                        if k + 1 != nu {
                            pp += z * a[idx(i, k + 2)];
                            a[idx(i, k + 2)] -= pp * r;
                        }
                        a[idx(i, k + 1)] -= pp * q;
                        a[idx(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| C64::new(re, im)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn diagonal() {
        let m = ComplexMatrix::from_diag(&[C64::new(2.0, 0.0), C64::new(3.0, 0.0)]);
        let e = sorted(eigenvalues(&m).unwrap());
        assert!((e[0] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert!((e[1] - C64::new(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn companion_matrix() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, -6.0], &[1.0, 5.0]]);
        let e = sorted(eigenvalues(&m).unwrap());
        assert!((e[0] - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((e[1] - C64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation_has_complex_pair() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let e = sorted(eigenvalues(&m).unwrap());
        assert!((e[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((e[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
        // complex path: same matrix with a tiny imaginary diagonal
        let mc = m.shift_diagonal(C64::new(0.0, -1e-3));
        let e = sorted(eigenvalues(&mc).unwrap());
        assert!((e[0] - C64::new(0.0, -1.0 + 1e-3)).norm() < 1e-12);
        assert!((e[1] - C64::new(0.0, 1.0 + 1e-3)).norm() < 1e-12);
    }

    #[test]
    fn jordan_block_and_zero_matrix() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        for e in eigenvalues(&m).unwrap() {
            assert!(e.norm() < 1e-12);
        }
        assert_eq!(eigenvalues(&ComplexMatrix::zeros(3, 3)).unwrap().len(), 3);
        assert!(eigenvalues(&ComplexMatrix::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn convergence_failure_reports_partial_work() {
        let m = ComplexMatrix::from_fn(6, 6, |i, j| C64::new(((i * 5 + j * 3) % 7) as f64, (i + j) as f64 * 0.1));
        match eigenvalues_with(&m, DEFAULT_EIGEN_TOL, 0) {
            Err(Error::Convergence { sweeps, .. }) => assert_eq!(sweeps, 0),
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }
}
