use outlab_core::ensembles::{
    outer_factors, random_zero_sum_vector, row_sum_projector, sample_iid_matrix, unit_ones_vector, AtomDistribution,
    PerturbedModel,
};
use outlab_core::linalg::{bilinear_power, eigenvalues, normalized, ComplexMatrix, C64};
use outlab_core::matching::matching_distance;
use outlab_core::outlier::AnnulusRegion;
use outlab_core::rng::{SeedPolicy, StreamTag};
use outlab_core::stats::{
    esd_histogram, gaussian_moment, gaussian_moment_test, interlacing_check, kpoint_estimate, ks_distance,
    least_singular_diagnostic, MomentAccumulator, PolarGrid,
};
use proptest::prelude::*;

fn gaussian(n: usize, rng: &mut outlab_core::rng::SplitMix64) -> Vec<C64> {
    (0..n).map(|_| AtomDistribution::GaussianComplex.sample(rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weyl_chain_holds_for_rank_one_updates(rows in 1usize..20, extra in 0usize..4, seed in any::<u64>(), scale in -3i32..4) {
        let cols = rows + extra;
        let mut rng = SeedPolicy::new(seed).stream(0, StreamTag::Auxiliary(11));
        let m = ComplexMatrix::from_vec(rows, cols, gaussian(rows * cols, &mut rng)).unwrap();
        let u: Vec<C64> = gaussian(rows, &mut rng).into_iter().map(|z| z * 10f64.powi(scale)).collect();
        let v = gaussian(cols, &mut rng);
        let r = interlacing_check(&m, &u, &v).unwrap();
        prop_assert!(r.holds, "violation {} > slack {}", r.max_violation, r.slack);
    }

    #[test]
    fn histogram_conserves_counts(points in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 0..200), bins in 1usize..12) {
        let eigs: Vec<C64> = points.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let h = esd_histogram(&eigs, C64::new(-1.0, -1.5), C64::new(1.5, 1.0), bins).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>() + h.outside, eigs.len() as u64);
    }

    #[test]
    fn one_point_function_integrates_to_mean_count(
        trials in prop::collection::vec(prop::collection::vec((0.0f64..4.0, 0.0f64..6.283), 0..8), 1..20),
        radial in 1usize..6, angular in 1usize..6,
    ) {
        let grid = PolarGrid::new(AnnulusRegion::new(1.2, 3.5).unwrap(), radial, angular).unwrap();
        let per_trial: Vec<Vec<C64>> =
            trials.iter().map(|t| t.iter().map(|&(r, a)| C64::from_polar(r, a)).collect()).collect();
        let est = kpoint_estimate(&per_trial, 1, &grid).unwrap();
        let integral: f64 = est.densities.iter().enumerate().map(|(c, d)| d * grid.area(c)).sum();
        let inside = per_trial.iter().flatten().filter(|z| grid.cell(**z).is_some()).count() as f64;
        prop_assert!((integral - inside / per_trial.len() as f64).abs() <= 1e-12 * (1.0 + integral));
    }

    #[test]
    fn two_point_function_integrates_to_half_pair_count(
        trials in prop::collection::vec(prop::collection::vec((1.2f64..3.5, 0.0f64..6.283), 0..6), 1..10),
    ) {
        let grid = PolarGrid::new(AnnulusRegion::new(1.2, 3.5).unwrap(), 2, 2).unwrap();
        let per_trial: Vec<Vec<C64>> =
            trials.iter().map(|t| t.iter().map(|&(r, a)| C64::from_polar(r, a)).collect()).collect();
        let est = kpoint_estimate(&per_trial, 2, &grid).unwrap();
        let cells = grid.len();
        let integral: f64 =
            est.densities.iter().enumerate().map(|(s, d)| d * grid.area(s / cells) * grid.area(s % cells)).sum();
        let pairs: f64 = per_trial
            .iter()
            .map(|t| {
                let k = t.iter().filter(|z| grid.cell(**z).is_some()).count() as f64;
                k * (k - 1.0) / 2.0
            })
            .sum::<f64>()
            / per_trial.len() as f64;
        prop_assert!((integral - pairs).abs() <= 1e-10 * (1.0 + pairs));
    }

    #[test]
    fn accumulator_merge_is_associative(xs in prop::collection::vec(-5.0f64..5.0, 1..300), cut in 0usize..300) {
        let cut = cut.min(xs.len());
        let whole: MomentAccumulator = xs.iter().copied().collect();
        let mut left: MomentAccumulator = xs[..cut].iter().copied().collect();
        left.merge(&xs[cut..].iter().copied().collect());
        for p in 0..=4 {
            prop_assert!((left.raw_moment(p) - whole.raw_moment(p)).abs() <= 1e-10 * whole.raw_moment(p).abs().max(1.0));
        }
    }
}

#[test]
fn gaussian_moment_targets() {
    assert_eq!([2, 4, 6].map(gaussian_moment), [1.0, 3.0, 15.0]);
    // r! / (2^{r/2} (r/2)!)
    for r in (2..=12).step_by(2) {
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let closed = fact(r) / (2f64.powi(r as i32 / 2) * fact(r / 2));
        assert!((gaussian_moment(r) - closed).abs() < 1e-9 * closed);
    }
}

#[test]
fn moment_test_accepts_gaussian_samples() {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = SeedPolicy::new(8).stream(0, StreamTag::Auxiliary(0));
    let xs: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    for r in [2, 4, 6] {
        assert!(gaussian_moment_test(&xs, r).unwrap().z_score.abs() < 4.0);
    }
    let uniform: Vec<f64> = (0..20_000).map(|_| 3f64.sqrt() * (2.0 * rng.next_f64() - 1.0)).collect();
    assert!(gaussian_moment_test(&uniform, 4).unwrap().z_score < -10.0);
}

#[test]
fn ks_distance_examples() {
    assert!((ks_distance(&[0.5], |x| x.clamp(0.0, 1.0)) - 0.5).abs() < 1e-15);
    let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
    assert!((ks_distance(&grid, |x| x) - 0.005).abs() < 1e-12);
}

#[test]
fn projected_spectrum_ignores_phi_psi_perturbations() {
    for seed in 0..4u64 {
        let n = 60;
        let x = sample_iid_matrix(n, AtomDistribution::Rademacher, SeedPolicy::new(seed), 0).unwrap();
        let xp = x.matmul(&row_sum_projector(n).unwrap()).unwrap();
        let base = eigenvalues(&normalized(&xp)).unwrap();
        let phi = unit_ones_vector(n).unwrap();
        for norm in [1.0, 10.0, 1000.0] {
            let psi = random_zero_sum_vector(n, norm, SeedPolicy::new(seed), 0).unwrap();
            let (a, b) = outer_factors(&phi, &psi);
            let model = PerturbedModel::new(xp.clone(), a, b, "zero_row_sum").unwrap();
            let pert = eigenvalues(&outlab_core::ensembles::assemble_dense(&model)).unwrap();
            let d = matching_distance(&base, &pert).unwrap();
            assert!(d < 1e-6, "seed {seed}, |psi| = {norm}: {d}");
        }
    }
}

#[test]
fn least_singular_value_of_projected_shift_stays_positive() {
    let n = 200;
    let p = row_sum_projector(n).unwrap();
    let z = C64::new(0.5, 0.5);
    let mut smallest = f64::INFINITY;
    for seed in 0..50u64 {
        let x = sample_iid_matrix(n, AtomDistribution::Rademacher, SeedPolicy::new(seed), 0).unwrap();
        let m = normalized(&x.matmul(&p).unwrap());
        smallest = smallest.min(least_singular_diagnostic(&m, z).unwrap());
    }
    assert!(smallest >= 1e-8, "{smallest}");
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    0.5 * (xs[(k - 1) / 2] + xs[k / 2])
}

#[test]
fn bilinear_forms_shrink_with_n() {
    // unit u = phi_n and a fixed-pattern unit v
    for m in 1..=3 {
        let med = |n: usize| {
            let phi = unit_ones_vector(n).unwrap();
            let v: Vec<C64> = (0..n).map(|i| C64::new(if i % 3 == 0 { 1.0 } else { -0.5 }, 0.0)).collect();
            let nv = outlab_core::linalg::vec_norm(&v);
            let v: Vec<C64> = v.into_iter().map(|z| z / nv).collect();
            median(
                (0..50u64)
                    .map(|s| {
                        let x = sample_iid_matrix(n, AtomDistribution::Rademacher, SeedPolicy::new(s), m as u64).unwrap();
                        bilinear_power(&x, m, &phi, &v).unwrap().norm()
                    })
                    .collect(),
            )
        };
        let (small, large) = (med(250), med(1000));
        assert!(large < small, "m = {m}: median {small} at n=250, {large} at n=1000");
    }
}

#[test]
fn bilinear_power_matches_dense_power() {
    let n = 6;
    let x = sample_iid_matrix(n, AtomDistribution::GaussianComplex, SeedPolicy::new(2), 0).unwrap();
    let m = normalized(&x);
    let m2 = m.matmul(&m).unwrap();
    let mut rng = SeedPolicy::new(2).stream(0, StreamTag::Auxiliary(4));
    let (u, v) = (gaussian(n, &mut rng), gaussian(n, &mut rng));
    let dense = outlab_core::linalg::inner(&m2.matvec(&u), &v);
    assert!((bilinear_power(&x, 2, &u, &v).unwrap() - dense).norm() < 1e-12 * (1.0 + dense.norm()));
    let id = ComplexMatrix::identity(n).scale(C64::new((n as f64).sqrt(), 0.0));
    let e1 = outlab_core::linalg::ComplexVector::basis(n, 0);
    assert!((bilinear_power(&id, 3, &e1, &e1).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-14);
}
