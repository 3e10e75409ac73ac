//! iid random matrices, structured low-rank perturbations and special vectors.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, C64};
use crate::rng::{SeedPolicy, SplitMix64, StreamTag};

/// Atom distribution of the matrix entries; every variant has mean zero and
/// `E|x|^2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomDistribution {
    /// `+1` or `-1` with equal probability.
    Rademacher,
    /// `N(0, 1)`.
    GaussianReal,
    /// `N(0, 1/2) + i N(0, 1/2)`.
    GaussianComplex,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    UniformBounded,
}

impl AtomDistribution {
    /// Almost-sure bound on `|x|`, if any.
    pub fn bound(self) -> Option<f64> {
        match self {
            AtomDistribution::Rademacher => Some(1.0),
            AtomDistribution::UniformBounded => Some(3f64.sqrt()),
            AtomDistribution::GaussianReal | AtomDistribution::GaussianComplex => None,
        }
    }

    pub fn is_real(self) -> bool {
        !matches!(self, AtomDistribution::GaussianComplex)
    }

    #[inline]
    pub fn sample(self, rng: &mut SplitMix64) -> C64 {
        match self {
            AtomDistribution::Rademacher => {
                if rng.random::<bool>() {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(-1.0, 0.0)
                }
            }
            AtomDistribution::GaussianReal => C64::new(rng.sample(StandardNormal), 0.0),
            AtomDistribution::GaussianComplex => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(s * re, s * im)
            }
            AtomDistribution::UniformBounded => {
                let b = 3f64.sqrt();
                C64::new(b * (2.0 * rng.next_f64() - 1.0), 0.0)
            }
        }
    }
}

/// `X / sqrt(n) + A B` with `A` of shape `n x k` and `B` of shape `k x n`.
#[derive(Clone, Debug)]
pub struct PerturbedModel {
    pub x: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub label: String,
}

impl PerturbedModel {
    pub fn new(x: ComplexMatrix, a: ComplexMatrix, b: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        let n = x.rows();
        if !x.is_square() || n == 0 {
            return Err(Error::InvalidDimension(format!("base matrix is {}x{}", x.rows(), x.cols())));
        }
        if a.rows() != n || b.cols() != n || a.cols() != b.rows() {
            return Err(Error::InvalidDimension(format!(
                "factors {}x{} and {}x{} do not fit n = {}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                n
            )));
        }
        if a.cols() > n {
            return Err(Error::InvalidRank { rank: a.cols(), n });
        }
        Ok(Self { x, a, b, label: label.into() })
    }

    /// Model with no perturbation (`k = 0`).
    pub fn unperturbed(x: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        let n = x.rows();
        Self::new(x, ComplexMatrix::zeros(n, 0), ComplexMatrix::zeros(0, n), label)
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn rank_bound(&self) -> usize {
        self.a.cols()
    }

    /// The perturbation `A B` as a dense matrix.
    pub fn perturbation(&self) -> ComplexMatrix {
        self.a.matmul(&self.b).expect("factor shapes checked at construction")
    }

    /// Nonzero-candidate eigenvalues of `A B`, i.e. the eigenvalues of `B A`.
    pub fn perturbation_eigenvalues(&self) -> Result<Vec<C64>> {
        let ba = self.b.matmul(&self.a)?;
        crate::linalg::eigenvalues(&ba)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    Ok(())
}

/// Unnormalized `n x n` iid matrix for `(seed, trial)`.
pub fn sample_iid_matrix(n: usize, atom: AtomDistribution, seed: SeedPolicy, trial: u64) -> Result<ComplexMatrix> {
    check_n(n)?;
    let mut rng = seed.stream(trial, StreamTag::Matrix);
    let data = (0..n * n).map(|_| atom.sample(&mut rng)).collect();
    ComplexMatrix::from_vec(n, n, data)
}

/// `phi_n = (1, ..., 1) / sqrt(n)`.
pub fn unit_ones_vector(n: usize) -> Result<ComplexVector> {
    check_n(n)?;
    let v = 1.0 / (n as f64).sqrt();
    Ok((0..n).map(|_| C64::new(v, 0.0)).collect())
}

/// Factors of `diag(leading, 0, ..., 0)`: `A` holds the first `k` basis
/// columns and `B = diag(leading) * (first k basis rows)`.
pub fn low_rank_from_diag(n: usize, leading: &[C64]) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let k = leading.len();
    if k > n {
        return Err(Error::InvalidRank { rank: k, n });
    }
    let mut a = ComplexMatrix::zeros(n, k);
    let mut b = ComplexMatrix::zeros(k, n);
    for (i, &l) in leading.iter().enumerate() {
        a[(i, i)] = C64::new(1.0, 0.0);
        b[(i, i)] = l;
    }
    Ok((a, b))
}

/// Factors of `mu sqrt(n) phi_n phi_n^*`, whose every entry equals `mu / sqrt(n)`.
pub fn mean_shift_factors(n: usize, mu: C64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let phi = unit_ones_vector(n)?;
    let s = mu * (n as f64).sqrt();
    let a = ComplexMatrix::from_fn(n, 1, |i, _| phi[i] * s);
    let b = ComplexMatrix::from_fn(1, n, |_, j| phi[j].conj());
    Ok((a, b))
}

/// Factors `A = mu sqrt(n) phi_n` and `B = psi_n^*` of the excitatory/inhibitory
/// network model. Each entry of `sqrt(n) psi_n` is `sqrt((1-p)/p)` with
/// probability `p` and `-sqrt(p/(1-p))` otherwise.
pub fn rajan_abbott_factors(
    n: usize,
    mu: f64,
    p: f64,
    seed: SeedPolicy,
    trial: u64,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_n(n)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} is not in (0, 1)")));
    }
    let phi = unit_ones_vector(n)?;
    let psi = rajan_abbott_psi(n, p, seed, trial);
    let s = mu * (n as f64).sqrt();
    let a = ComplexMatrix::from_fn(n, 1, |i, _| phi[i] * s);
    let b = ComplexMatrix::from_fn(1, n, |_, j| psi[j].conj());
    Ok((a, b))
}

fn rajan_abbott_psi(n: usize, p: f64, seed: SeedPolicy, trial: u64) -> ComplexVector {
    let mut rng = seed.stream(trial, StreamTag::Perturbation);
    let scale = 1.0 / (n as f64).sqrt();
    let hi = ((1.0 - p) / p).sqrt() * scale;
    let lo = -(p / (1.0 - p)).sqrt() * scale;
    (0..n).map(|_| C64::new(if rng.next_f64() < p { hi } else { lo }, 0.0)).collect()
}

/// `P_n = I - phi_n phi_n^*`, the projection onto zero-sum vectors.
pub fn row_sum_projector(n: usize) -> Result<ComplexMatrix> {
    check_n(n)?;
    let off = -1.0 / n as f64;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| C64::new(if i == j { 1.0 + off } else { off }, 0.0)))
}

/// Dense `X / sqrt(n) + A B`.
pub fn assemble_dense(model: &PerturbedModel) -> ComplexMatrix {
    let n = model.n();
    let s = 1.0 / (n as f64).sqrt();
    let mut out = model.x.scale(C64::new(s, 0.0));
    if model.rank_bound() > 0 {
        let ab = model.perturbation();
        for (o, p) in out.as_mut_slice().iter_mut().zip(ab.as_slice()) {
            *o += p;
        }
    }
    out
}

/// `(X / sqrt(n) + A B) v` without forming the dense sum.
pub fn apply_factored(model: &PerturbedModel, v: &[C64]) -> ComplexVector {
    let n = model.n();
    let s = 1.0 / (n as f64).sqrt();
    let mut out = model.x.matvec(v).scale(C64::new(s, 0.0));
    if model.rank_bound() > 0 {
        let bv = model.b.matvec(v);
        let abv = model.a.matvec(&bv);
        for (o, x) in out.iter_mut().zip(abv.iter()) {
            *o += x;
        }
    }
    out
}

/// A random vector orthogonal to `phi_n`, scaled to the given norm.
pub fn random_zero_sum_vector(n: usize, norm: f64, seed: SeedPolicy, trial: u64) -> Result<ComplexVector> {
    check_n(n)?;
    let mut rng = seed.stream(trial, StreamTag::Auxiliary(7));
    let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.sample(StandardNormal), 0.0)).collect();
    let mean: C64 = v.iter().sum::<C64>() / n as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
    let len = crate::linalg::vec_norm(&v);
    if len == 0.0 {
        return Ok(ComplexVector::zeros(n));
    }
    Ok(v.into_iter().map(|x| x * (norm / len)).collect())
}

/// Rank-one factors `u v^*` as `n x 1` and `1 x n` matrices.
pub fn outer_factors(u: &[C64], v: &[C64]) -> (ComplexMatrix, ComplexMatrix) {
    let a = ComplexMatrix::from_fn(u.len(), 1, |i, _| u[i]);
    let b = ComplexMatrix::from_fn(1, v.len(), |_, j| v[j].conj());
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn determinism_and_support() {
        let seed = SeedPolicy::new(11);
        let a = sample_iid_matrix(2, AtomDistribution::Rademacher, seed, 0).unwrap();
        let b = sample_iid_matrix(2, AtomDistribution::Rademacher, seed, 0).unwrap();
        assert_eq!(a, b);
        let big = sample_iid_matrix(1000, AtomDistribution::Rademacher, seed, 1).unwrap();
        assert!(big.as_slice().iter().all(|z| z.im == 0.0 && z.re.abs() == 1.0));
        assert!(matches!(
            sample_iid_matrix(0, AtomDistribution::Rademacher, seed, 0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn gaussian_entry_variance() {
        let x = sample_iid_matrix(1000, AtomDistribution::GaussianReal, SeedPolicy::new(3), 0).unwrap();
        let n = x.as_slice().len() as f64;
        let mean = x.as_slice().iter().map(|z| z.re).sum::<f64>() / n;
        let var = x.as_slice().iter().map(|z| (z.re - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn ones_vector() {
        let v = unit_ones_vector(4).unwrap();
        assert!(v.iter().all(|z| *z == c(0.5)));
        assert_eq!(unit_ones_vector(1).unwrap().0, vec![c(1.0)]);
        for n in [1, 7, 100, 1023] {
            assert!((unit_ones_vector(n).unwrap().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diag_factors() {
        let (a, b) = low_rank_from_diag(3, &[c(5.0)]).unwrap();
        assert_eq!(a.matmul(&b).unwrap(), ComplexMatrix::from_diag(&[c(5.0), c(0.0), c(0.0)]));
        let (a, b) = low_rank_from_diag(4, &[]).unwrap();
        assert_eq!(a.matmul(&b).unwrap(), ComplexMatrix::zeros(4, 4));
        assert!(matches!(low_rank_from_diag(1, &[c(1.0), c(2.0)]), Err(Error::InvalidRank { rank: 2, n: 1 })));
    }

    #[test]
    fn mean_shift_entries() {
        let (a, b) = mean_shift_factors(4, c(1.0)).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert!(ab.as_slice().iter().all(|z| (z - c(0.5)).norm() < 1e-15));
        let (a, b) = mean_shift_factors(50, c(1.0)).unwrap();
        let ev = b.matmul(&a).unwrap()[(0, 0)];
        assert!((ev - c(50f64.sqrt())).norm() < 1e-12);
    }

    #[test]
    fn rajan_abbott_values() {
        let n = 400;
        let (_, b) = rajan_abbott_factors(n, 2.0, 0.25, SeedPolicy::new(5), 0).unwrap();
        let hi = 3f64.sqrt();
        let lo = -1.0 / 3f64.sqrt();
        for z in b.as_slice() {
            let s = z.re * (n as f64).sqrt();
            assert!((s - hi).abs() < 1e-12 || (s - lo).abs() < 1e-12, "{s}");
        }
        assert!(rajan_abbott_factors(4, 1.0, 1.0, SeedPolicy::new(5), 0).is_err());
        assert!(rajan_abbott_factors(4, 1.0, 0.0, SeedPolicy::new(5), 0).is_err());
    }

    #[test]
    fn projector_entries() {
        let p = row_sum_projector(2).unwrap();
        assert_eq!(p, ComplexMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]));
    }

    #[test]
    fn assemble_simple_cases() {
        let (a, b) = low_rank_from_diag(2, &[c(3.0)]).unwrap();
        let m = PerturbedModel::new(ComplexMatrix::zeros(2, 2), a, b, "t").unwrap();
        assert_eq!(assemble_dense(&m), ComplexMatrix::from_diag(&[c(3.0), c(0.0)]));
        let x = sample_iid_matrix(3, AtomDistribution::Rademacher, SeedPolicy::new(1), 0).unwrap();
        let m = PerturbedModel::unperturbed(x.clone(), "k0").unwrap();
        assert_eq!(assemble_dense(&m), crate::linalg::normalized(&x));
    }
}
