use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use proptest::prelude::*;

use spdc_core::polarization::*;
use spdc_core::tomography::*;

fn local_unitary(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Matrix2<Complex64> {
    let e = |x: f64| Complex64::from_polar(1.0, x);
    let (s, c) = gamma.sin_cos();
    Matrix2::new(e(beta) * c, e(delta) * s, -e(-delta) * s, e(-beta) * c) * e(alpha)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pump_state_is_pi_periodic_and_maximally_entangled(theta in -4.0 * PI..4.0 * PI) {
        let a = pair_state_from_pump(theta);
        let b = pair_state_from_pump(theta + PI);
        prop_assert!((a.overlap(&b) - 1.0).abs() < 1e-12);
        let c = concurrence(&state_to_density_matrix(&a).unwrap()).unwrap();
        prop_assert!((c - 1.0).abs() < 1e-7);
    }

    #[test]
    fn fidelity_landscape(theta in -PI..PI) {
        let psi = pair_state_from_pump(theta);
        let rho = state_to_density_matrix(&psi).unwrap();
        let f_phi = fidelity(&rho, &BellState::PhiMinus.state()).unwrap();
        let f_psi = fidelity(&rho, &BellState::PsiPlus.state()).unwrap();
        prop_assert!((f_phi - theta.cos().powi(2)).abs() < 1e-12);
        prop_assert!((f_psi - theta.sin().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn shg_channels_sum_to_d_squared(theta in -PI..PI, d in 0.1f64..5.0) {
        let t = ChiTensor::new(d);
        let total = shg_intensity(&t, theta, Analyzer::Parallel) + shg_intensity(&t, theta, Analyzer::Perpendicular);
        prop_assert!((total - d * d).abs() < 1e-12 * d * d);
    }

    #[test]
    fn metrics_invariant_under_local_unitaries(
        p in 0.0f64..1.0,
        a in proptest::array::uniform4(-PI..PI),
        b in proptest::array::uniform4(-PI..PI),
    ) {
        let target = BellState::PsiMinus.state();
        let rho = state_to_density_matrix(&target).unwrap().mix_with_white_noise(p).unwrap();
        let u1 = local_unitary(a[0], a[1], a[2], a[3]);
        let u2 = local_unitary(b[0], b[1], b[2], b[3]);
        let rho_u = rho.apply_local(&u1, &u2);
        let target_u = target.apply_local(&u1, &u2).unwrap();
        prop_assert!((fidelity(&rho, &target).unwrap() - fidelity(&rho_u, &target_u).unwrap()).abs() < 1e-10);
        prop_assert!((concurrence(&rho).unwrap() - concurrence(&rho_u).unwrap()).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mle_output_is_always_physical(
        counts in proptest::collection::vec(0u64..200_000, 16),
        times in proptest::collection::vec(0.01f64..100.0, 16),
    ) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let recs: Vec<MeasurementRecord> = standard_16_settings()
            .into_iter()
            .zip(counts.iter().zip(&times))
            .map(|(s, (&c, &t))| MeasurementRecord { setting: s, counts: c, acquisition_time: t })
            .collect();
        let res = match mle_reconstruct(&recs, None, &MleOptions::default()) {
            Ok(r) => r,
            Err(spdc_core::Error::NotConverged { best, .. }) => *best,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(res.rho.eigenvalues()[0] >= -1e-10);
        prop_assert!((res.rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(res.rho.hermiticity_error() < 1e-10);
        prop_assert!(res.log_likelihood_history.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn shg_pattern_has_six_maxima_and_six_zeros() {
    let t = ChiTensor::new(1.0);
    let n = 7200;
    let v: Vec<f64> = (0..n).map(|k| shg_intensity(&t, 2.0 * PI * k as f64 / n as f64, Analyzer::Parallel)).collect();
    let at = |k: usize| v[k % n];
    let maxima = (0..n).filter(|&k| at(k) >= at(k + n - 1) && at(k) > at(k + 1)).count();
    let zeros = (0..n).filter(|&k| at(k) <= at(k + n - 1) && at(k) < at(k + 1) && at(k) < 1e-5).count();
    assert_eq!((maxima, zeros), (6, 6));
    assert!((shg_intensity(&t, 0.0, Analyzer::Parallel) - 1.0).abs() < 1e-15);
    assert!(shg_intensity(&t, PI / 6.0, Analyzer::Parallel) < 1e-15);
}

#[test]
fn pump_angle_experiment_examples() {
    let opts = MleOptions::default();
    let r0 = pump_angle_experiment(0.0, 1.0, 1e5, 1, &opts).unwrap();
    assert!(r0.fidelity.unwrap() >= 0.99);
    let r90 = pump_angle_experiment(0.5 * PI, 1.0, 1e5, 2, &opts).unwrap();
    assert!(r90.fidelity.unwrap() >= 0.99);
    assert!((fidelity(&r90.rho, &BellState::PsiPlus.state()).unwrap() - r90.fidelity.unwrap()).abs() < 1e-9);
    let noisy = pump_angle_experiment(0.0, 0.76, 1e5, 3, &opts).unwrap();
    assert!((noisy.fidelity.unwrap() - 0.82).abs() <= 0.02);
}

#[test]
fn reconstruction_error_shrinks_with_counts() {
    let target = BellState::PhiMinus.state();
    let rho = state_to_density_matrix(&target).unwrap().mix_with_white_noise(0.8).unwrap();
    let exact = fidelity(&rho, &target).unwrap();
    let settings = standard_16_settings();
    let mut medians = Vec::new();
    for n in [1e3, 1e4, 1e5] {
        let mut errs: Vec<f64> = (0..20u64)
            .map(|seed| {
                let recs = simulate_counts(&rho, &settings, n, seed).unwrap();
                let res = mle_reconstruct(&recs, None, &MleOptions::default()).unwrap();
                (fidelity(&res.rho, &target).unwrap() - exact).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        medians.push(0.5 * (errs[9] + errs[10]));
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn mle_stays_physical_where_linear_inversion_does_not() {
    let rho = state_to_density_matrix(&BellState::PhiMinus.state()).unwrap();
    let settings = standard_16_settings();
    let unphysical = (0..40u64)
        .map(|seed| simulate_counts(&rho, &settings, 100.0, seed).unwrap())
        .find(|recs| linear_reconstruct(recs).unwrap().eigenvalues()[0] < 0.0)
        .expect("some low-count data set gives a negative linear estimate");
    let mle = mle_reconstruct(&unphysical, None, &MleOptions::default()).unwrap();
    mle.rho.check().unwrap();
}
