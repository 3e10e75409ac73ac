//! The `k x k` determinant `f(z) = det(I_k + B (X/sqrt(n) - z I)^{-1} A)` and
//! its evaluators.

use serde::{Deserialize, Serialize};

use crate::ensembles::PerturbedModel;
use crate::error::{Error, Result};
use crate::linalg::matrix::DenseOperator;
use crate::linalg::{determinant, lu_factor, normalized, vec_norm, ComplexMatrix, HessenbergForm, C64, ONE, ZERO};

/// Largest dimension accepted by [`char_poly_ratio_oracle`].
pub const ORACLE_MAX_N: usize = 512;

/// `det(I_k + M)` for a `k x k` matrix stored row-major.
fn det_identity_plus(k: usize, m: Vec<C64>) -> Result<C64> {
    if k == 0 {
        return Ok(ONE);
    }
    let mut m = ComplexMatrix::from_vec(k, k, m)?;
    for i in 0..k {
        m.as_mut_slice()[i * k + i] += ONE;
    }
    determinant(&m)
}

/// `B Y` for `B` of shape `k x n` and `Y` given as `k` columns of length `n`.
fn small_product(b: &ComplexMatrix, cols: &[Vec<C64>]) -> Vec<C64> {
    let k = b.rows();
    let mut out = vec![ZERO; k * k];
    for i in 0..k {
        let row = b.row(i);
        for (l, y) in cols.iter().enumerate() {
            out[i * k + l] = row.iter().zip(y).map(|(p, q)| p * q).sum();
        }
    }
    out
}

/// Evaluates `f(z)` with one LU factorization of `X/sqrt(n) - z I`.
pub fn weinstein_det(model: &PerturbedModel, z: C64) -> Result<C64> {
    let k = model.rank_bound();
    if k == 0 {
        return Ok(ONE);
    }
    let lu = lu_factor(&normalized(&model.x).shift_diagonal(z))?;
    if lu.is_singular() {
        return Err(Error::ResolventSingular { z });
    }
    let cols = (0..k).map(|l| lu.solve(&model.a.column(l)).map(|v| v.into_vec())).collect::<Result<Vec<_>>>()?;
    det_identity_plus(k, small_product(&model.b, &cols))
}

/// `g(z) = prod_i (1 - lambda_i / z)`.
pub fn comparator_rational(eigs: &[C64], z: C64) -> Result<C64> {
    if z == ZERO {
        return Err(Error::Pole);
    }
    Ok(eigs.iter().map(|l| ONE - l / z).product())
}

/// `det(X/sqrt(n) + A B - z I) / det(X/sqrt(n) - z I)` from two dense determinants.
pub fn char_poly_ratio_oracle(model: &PerturbedModel, z: C64) -> Result<C64> {
    let n = model.n();
    if n > ORACLE_MAX_N {
        return Err(Error::Precondition(format!("dense oracle limited to n <= {ORACLE_MAX_N}, got {n}")));
    }
    let base = normalized(&model.x).shift_diagonal(z);
    let den = lu_factor(&base)?;
    if den.is_singular() {
        return Err(Error::OracleSingular { z });
    }
    let num = base.add(&model.perturbation())?;
    Ok(determinant(&num)? / den.determinant())
}

/// A way of evaluating `f` at many points for one model.
pub trait Evaluator: Sync {
    fn eval(&self, z: C64) -> Result<C64>;

    /// Evaluations are valid for `|z|` at least this large.
    fn certified_radius(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Hessenberg for small `n`, Neumann otherwise.
    #[default]
    Auto,
    Direct,
    Hessenberg,
    Neumann,
}

/// Dimension above which [`Backend::Auto`] uses the Neumann evaluator.
pub const AUTO_NEUMANN_ABOVE: usize = 400;

/// Fresh LU factorization per point. Reference implementation.
pub struct DirectEvaluator<'a> {
    model: &'a PerturbedModel,
}

impl<'a> DirectEvaluator<'a> {
    pub fn new(model: &'a PerturbedModel) -> Self {
        Self { model }
    }
}

impl Evaluator for DirectEvaluator<'_> {
    fn eval(&self, z: C64) -> Result<C64> {
        weinstein_det(self.model, z)
    }
}

/// One Hessenberg reduction `X/sqrt(n) = Q H Q^*`, then `O(n^2 k)` per point.
pub struct HessenbergEvaluator {
    form: HessenbergForm,
    /// Columns of `Q^* A`.
    a_hat: Vec<Vec<C64>>,
    /// `B Q`.
    b_hat: ComplexMatrix,
}

impl HessenbergEvaluator {
    pub fn new(model: &PerturbedModel) -> Result<Self> {
        let form = HessenbergForm::new(&normalized(&model.x))?;
        let (n, k) = (model.n(), model.rank_bound());
        let a_hat = (0..k)
            .map(|l| {
                let mut c = model.a.column(l).into_vec();
                form.apply_q_adjoint(&mut c);
                c
            })
            .collect();
        let mut b_hat = ComplexMatrix::zeros(k, n);
        for i in 0..k {
            let mut r: Vec<C64> = model.b.row(i).iter().map(|z| z.conj()).collect();
            form.apply_q_adjoint(&mut r);
            for (dst, v) in b_hat.row_mut(i).iter_mut().zip(r) {
                *dst = v.conj();
            }
        }
        Ok(Self { form, a_hat, b_hat })
    }
}

impl Evaluator for HessenbergEvaluator {
    fn eval(&self, z: C64) -> Result<C64> {
        let k = self.a_hat.len();
        if k == 0 {
            return Ok(ONE);
        }
        let mut cols = self.a_hat.clone();
        self.form.shifted_solve(z, &mut cols)?;
        det_identity_plus(k, small_product(&self.b_hat, &cols))
    }
}

/// Truncated Laurent expansion `f(z) = det(I - sum_j C_j z^{-j-1})` with
/// `C_j = B (X/sqrt(n))^j A`, valid outside the spectral radius.
///
/// Truncation is certified from the guard `rho = ||M^{m0}||^{1/m0}`: writing
/// `j = J + s + q m0` gives `||M^j a|| <= rho^{q m0} ||M^{J+s} a||`, so the
/// computed block of `m0` vector norms bounds the whole tail geometrically.
pub struct NeumannEvaluator {
    k: usize,
    /// `C_j` row-major, `j = 0..terms`.
    coeffs: Vec<Vec<C64>>,
    r_cert: f64,
    tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeumannOptions {
    /// Entrywise bound on the neglected tail at `|z| = r_cert`.
    pub tail_tol: f64,
    pub max_terms: usize,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self { tail_tol: 1e-13, max_terms: 20_000 }
    }
}

impl NeumannEvaluator {
    /// `rho` and `m0` come from the spectral-radius guard; `r_cert > rho` is
    /// the smallest modulus at which `f` will be evaluated.
    pub fn new(model: &PerturbedModel, rho: f64, m0: usize, r_cert: f64, opts: NeumannOptions) -> Result<Self> {
        if !(r_cert > rho) || m0 == 0 {
            return Err(Error::Precondition(format!(
                "Neumann expansion needs r_cert > rho and m0 >= 1 (r_cert = {r_cert}, rho = {rho}, m0 = {m0})"
            )));
        }
        let (n, k) = (model.n(), model.rank_bound());
        if k == 0 {
            return Ok(Self { k, coeffs: Vec::new(), r_cert, tail_bound: 0.0 });
        }
        let op = DenseOperator::new(&model.x, 1.0 / (n as f64).sqrt());
        let b_norm = (0..k).map(|i| vec_norm(model.b.row(i))).fold(0.0, f64::max);
        let decay = (rho / r_cert).powi(m0 as i32);
        let block_factor = decay / (1.0 - decay);

        let mut vs: Vec<Vec<C64>> = (0..k).map(|l| model.a.column(l).into_vec()).collect();
        let mut tmp = vec![ZERO; n];
        // scaled norms ||M^j a_l|| r^{-j-1}
        let mut scaled: Vec<Vec<f64>> = Vec::new();
        let mut coeffs = Vec::new();
        let mut rpow = 1.0 / r_cert;
        for t in 0..opts.max_terms {
            coeffs.push(small_product(&model.b, &vs));
            scaled.push(vs.iter().map(|v| vec_norm(v) * rpow).collect());
            if t + 1 >= m0 {
                let start = t + 1 - m0;
                let tail = (0..k)
                    .map(|l| scaled[start..=t].iter().map(|row| row[l]).sum::<f64>())
                    .fold(0.0, f64::max)
                    * block_factor
                    * b_norm;
                if tail <= opts.tail_tol {
                    return Ok(Self { k, coeffs, r_cert, tail_bound: tail });
                }
            }
            for v in vs.iter_mut() {
                op.apply(v, &mut tmp);
                v.copy_from_slice(&tmp);
            }
            rpow /= r_cert;
        }
        Err(Error::Precondition(format!(
            "Neumann tail above {} after {} terms (rho = {rho}, r_cert = {r_cert})",
            opts.tail_tol, opts.max_terms
        )))
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Certified entrywise bound on the neglected tail for `|z| >= r_cert`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
}

impl Evaluator for NeumannEvaluator {
    fn eval(&self, z: C64) -> Result<C64> {
        if self.k == 0 {
            return Ok(ONE);
        }
        let modulus = z.norm();
        if modulus < self.r_cert {
            return Err(Error::OutsideCertifiedRegion { modulus, r_min: self.r_cert });
        }
        let w = ONE / z;
        let mut acc = vec![ZERO; self.k * self.k];
        for c in self.coeffs.iter().rev() {
            for (a, &cj) in acc.iter_mut().zip(c) {
                *a = *a * w + cj;
            }
        }
        det_identity_plus(self.k, acc.into_iter().map(|s| -s * w).collect())
    }

    fn certified_radius(&self) -> f64 {
        self.r_cert
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{low_rank_from_diag, sample_iid_matrix, AtomDistribution};
    use crate::rng::SeedPolicy;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn zero_model(n: usize, diag: &[C64]) -> PerturbedModel {
        let (a, b) = low_rank_from_diag(n, diag).unwrap();
        PerturbedModel::new(ComplexMatrix::zeros(n, n), a, b, "zero").unwrap()
    }

    #[test]
    fn zero_base_matches_comparator() {
        let m = zero_model(1, &[c(3.0, 0.0)]);
        assert!((weinstein_det(&m, c(6.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!(weinstein_det(&m, c(3.0, 0.0)).unwrap().norm() < 1e-15);
        let m5 = zero_model(5, &[c(3.0, 0.0)]);
        assert!((char_poly_ratio_oracle(&m5, c(6.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn comparator_examples() {
        assert_eq!(comparator_rational(&[c(3.0, 0.0)], c(3.0, 0.0)).unwrap(), ZERO);
        assert!((comparator_rational(&[c(2.0, 0.0)], c(4.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let far = comparator_rational(&[c(2.0, 1.0), c(3.0, 0.0), c(2.0, 0.0)], c(1e6, 0.0)).unwrap();
        assert!((far - ONE).norm() < 1e-5);
        assert!(matches!(comparator_rational(&[c(1.0, 0.0)], ZERO), Err(Error::Pole)));
    }

    #[test]
    fn rademacher_n4_against_direct_determinants() {
        let x = sample_iid_matrix(4, AtomDistribution::Rademacher, SeedPolicy::new(11), 0).unwrap();
        let (a, b) = low_rank_from_diag(4, &[c(3.0, 0.0)]).unwrap();
        let model = PerturbedModel::new(x.clone(), a, b, "n4").unwrap();
        let z = c(2.0, 0.0);
        let base = x.scale(c(0.5, 0.0)).shift_diagonal(z);
        let mut pert = base.clone();
        pert.as_mut_slice()[0] += c(3.0, 0.0);
        let expect = determinant(&pert).unwrap() / determinant(&base).unwrap();
        assert!((weinstein_det(&model, z).unwrap() - expect).norm() < 1e-12 * (1.0 + expect.norm()));
    }

    #[test]
    fn empty_perturbation_is_identically_one() {
        let x = sample_iid_matrix(6, AtomDistribution::GaussianReal, SeedPolicy::new(2), 0).unwrap();
        let m = PerturbedModel::unperturbed(x, "k0").unwrap();
        for z in [c(2.0, 0.0), c(0.0, -3.0)] {
            assert_eq!(weinstein_det(&m, z).unwrap(), ONE);
            assert!((char_poly_ratio_oracle(&m, z).unwrap() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn evaluators_agree() {
        let n = 40;
        let x = sample_iid_matrix(n, AtomDistribution::Rademacher, SeedPolicy::new(5), 3).unwrap();
        let (a, b) = low_rank_from_diag(n, &[c(2.0, 1.0), c(3.0, 0.0), c(2.0, 0.0)]).unwrap();
        let model = PerturbedModel::new(x, a, b, "agree").unwrap();
        let hess = HessenbergEvaluator::new(&model).unwrap();
        let rho = crate::linalg::power_norm_scaled(&model.x, 1.0 / (n as f64).sqrt(), 60, 1e-8, 500).powf(1.0 / 60.0);
        let neu = NeumannEvaluator::new(&model, rho, 60, 1.5, NeumannOptions::default()).unwrap();
        for z in [c(1.6, 0.3), c(-2.0, 1.0), c(3.1, -0.2), c(0.0, 5.0)] {
            let d = weinstein_det(&model, z).unwrap();
            let tol = 1e-9 * (1.0 + d.norm());
            assert!((hess.eval(z).unwrap() - d).norm() < tol);
            assert!((neu.eval(z).unwrap() - d).norm() < tol, "{z}");
        }
        assert!(matches!(neu.eval(c(1.0, 0.0)), Err(Error::OutsideCertifiedRegion { .. })));
    }
}
