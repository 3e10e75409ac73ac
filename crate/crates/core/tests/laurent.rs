use outlab_core::laurent::{
    choose_truncation, gps_correlation, sample_series, series_zero_search, tail_sigma, Field, GaussianPowerSeries,
    GpsKernel, RandomLaurentSeries,
};
use outlab_core::linalg::{eigenvalues, ComplexMatrix, C64, ONE, ZERO};
use outlab_core::outlier::{WindingOptions, ZeroOptions};
use outlab_core::rng::SeedPolicy;
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn located_multiplicities_add_up_to_the_winding(seed in any::<u64>(), mu in 0.5f64..3.0, real in any::<bool>()) {
        let field = if real { Field::Real } else { Field::Complex };
        let policy = choose_truncation(1.3, 1e-6, 1e-9, mu).unwrap();
        let s = sample_series(mu, policy, field, SeedPolicy::new(seed), 0);
        let search = series_zero_search(&s, &s.default_region(1.3).unwrap(), &ZeroOptions::default()).unwrap();
        let total: usize = search.zeros.iter().map(|z| z.multiplicity).sum();
        prop_assert_eq!(total as i64, search.total_winding);
        for z in &search.zeros {
            prop_assert!(s.evaluate(z.position).unwrap().norm() < 1e-8);
        }
    }

    #[test]
    fn truncation_meets_its_tail_target(r in 1.05f64..3.0, tol in 1e-10f64..1e-2, mu in 0.1f64..5.0) {
        let p = choose_truncation(r, tol, 1e-9, mu).unwrap();
        let q = 6.109410204869; // two-sided normal quantile at 1e-9
        prop_assert!(tail_sigma(mu, r, p.certified_order) * q <= tol * (1.0 + 1e-9));
        if p.certified_order > 1 {
            prop_assert!(tail_sigma(mu, r, p.certified_order - 1) * q > tol * (1.0 - 1e-9));
        }
    }

    #[test]
    fn gps_zero_count_matches_companion_eigenvalues(seed in any::<u64>(), order in 3usize..16, r in 0.2f64..0.9) {
        let f = GaussianPowerSeries::sample(order, SeedPolicy::new(seed), 0);
        let a = &f.coefficients;
        let lead = a[order - 1];
        prop_assume!(lead.norm() > 1e-3);
        let deg = order - 1;
        // companion matrix of the monic polynomial a(w) / lead
        let comp = ComplexMatrix::from_fn(deg, deg, |i, j| {
            if i == 0 {
                -a[deg - 1 - j] / lead
            } else if i == j + 1 {
                ONE
            } else {
                ZERO
            }
        });
        let roots = eigenvalues(&comp).unwrap();
        prop_assume!(roots.iter().all(|w| (w.norm() - r).abs() > 1e-3));
        let inside = roots.iter().filter(|w| w.norm() < r).count() as i64;
        prop_assert_eq!(f.zeros_in_disk(r, &WindingOptions::default()).unwrap(), inside);
    }
}

#[test]
fn one_point_functions_in_closed_form() {
    for w in [C64::new(0.2, 0.1), C64::new(-0.6, 0.3), C64::new(0.0, 0.9)] {
        let t = 1.0 - w.norm_sqr();
        assert!((gps_correlation(&[w], GpsKernel::Plain).unwrap() - 1.0 / (PI * t)).abs() < 1e-12 / t);
        assert!((gps_correlation(&[w], GpsKernel::Squared).unwrap() - 1.0 / (PI * t * t)).abs() < 1e-12 / (t * t));
    }
    assert!(gps_correlation(&[C64::new(1.0, 0.0)], GpsKernel::Plain).is_err());
}

#[test]
fn two_point_function_vanishes_on_the_diagonal_and_factorizes_far_apart() {
    let w = C64::new(0.4, -0.2);
    for kernel in [GpsKernel::Plain, GpsKernel::Squared] {
        assert!(gps_correlation(&[w, w], kernel).unwrap() < 1e-12);
        // at w' = 0 the kernel entries involving it are 1
        let pair = gps_correlation(&[w, ZERO], kernel).unwrap();
        let k = gps_correlation(&[w], kernel).unwrap() * PI;
        assert!((pair - (k - 1.0) / (PI * PI)).abs() < 1e-12);
    }
}

#[test]
fn annulus_density_matches_radial_quadrature() {
    for kernel in [GpsKernel::Plain, GpsKernel::Squared] {
        for (a, b) in [(0.25, 0.35), (0.0, 0.5), (0.65, 0.75)] {
            // integral of rho_1(r) 2 pi r dr by composite Simpson
            let steps = 2000;
            let h = (b - a) / steps as f64;
            let g = |r: f64| gps_correlation(&[C64::new(r, 0.0)], kernel).unwrap() * 2.0 * PI * r;
            let mut sum = g(a) + g(b);
            for i in 1..steps {
                sum += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let count = sum * h / 3.0;
            let want = count / (PI * (b * b - a * a));
            let got = kernel.annulus_density(a, b);
            assert!((got - want).abs() < 1e-9 * want, "{kernel:?} on [{a}, {b}]: {got} vs {want}");
        }
    }
}

#[test]
fn series_zero_of_two_term_series() {
    // 1 - mu (z^{-1} + z^{-2}) = 0  <=>  z^2 - mu z - mu = 0
    let mu = 2.0;
    let policy = choose_truncation(1.2, 1e-6, 1e-9, mu).unwrap();
    let mut g = vec![ZERO; policy.certified_order];
    g[0] = ONE;
    g[1] = ONE;
    let s = RandomLaurentSeries::from_coefficients(mu, Field::Real, g, policy);
    let search = series_zero_search(&s, &s.default_region(1.2).unwrap(), &ZeroOptions::default()).unwrap();
    let root = (mu + (mu * mu + 4.0 * mu).sqrt()) / 2.0;
    assert_eq!(search.total_winding, 1);
    assert!((search.zeros[0].position - C64::new(root, 0.0)).norm() < 1e-9);
}

#[test]
fn sampling_is_deterministic_per_trial() {
    let policy = choose_truncation(1.3, 1e-6, 1e-9, 2.0).unwrap();
    let a = sample_series(2.0, policy, Field::Complex, SeedPolicy::new(9), 4);
    let b = sample_series(2.0, policy, Field::Complex, SeedPolicy::new(9), 4);
    let c = sample_series(2.0, policy, Field::Complex, SeedPolicy::new(9), 5);
    assert_eq!(a, b);
    assert_ne!(a.coefficients, c.coefficients);
    assert!(sample_series(2.0, policy, Field::Real, SeedPolicy::new(9), 4).coefficients.iter().all(|g| g.im == 0.0));
}

#[test]
fn complex_coefficients_have_unit_second_moment() {
    let policy = choose_truncation(1.01, 1e-6, 1e-9, 1.0).unwrap();
    let mut acc = 0.0;
    let mut count = 0.0;
    for t in 0..40 {
        for g in sample_series(1.0, policy, Field::Complex, SeedPolicy::new(1), t).coefficients {
            acc += g.norm_sqr();
            count += 1.0;
        }
    }
    assert!((acc / count - 1.0).abs() < 5.0 / count.sqrt(), "{}", acc / count);
}
