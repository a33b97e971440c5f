use spdc_core::photon_stats::*;

fn quiet_detector() -> DetectorModel {
    DetectorModel::new(1.0, 0.0, 0.0).unwrap()
}

fn peak_area(source: &SourceModel, d1: &DetectorModel, d2: &DetectorModel, seed: u64) -> f64 {
    let (s1, s2) = simulate_time_tags(source, d1, d2, 1.0, 100.0, seed).unwrap();
    let hist = coincidence_histogram(&s1, &s2, 1e-9, 50e-9, 100.0).unwrap();
    peak_coincidence_rate(&hist, default_exclusion(d1, d2, 1e-9)).unwrap()
}

#[test]
fn identical_seeds_are_bit_exact() {
    let source = SourceModel { pair_rate_per_mw: 50.0, uncorrelated_background_1: 300.0, uncorrelated_background_2: 100.0 };
    let det = DetectorModel::new(0.4, 50.0, 80e-12).unwrap();
    let a = simulate_time_tags(&source, &det, &det, 10.0, 20.0, 77).unwrap();
    let b = simulate_time_tags(&source, &det, &det, 10.0, 20.0, 77).unwrap();
    assert_eq!(a, b);
    let ha = coincidence_histogram(&a.0, &a.1, 1e-9, 100e-9, 20.0).unwrap();
    let hb = coincidence_histogram(&b.0, &b.1, 1e-9, 100e-9, 20.0).unwrap();
    assert_eq!(ha, hb);
    let c = simulate_time_tags(&source, &det, &det, 10.0, 20.0, 78).unwrap();
    assert_ne!(a, c);
}

#[test]
fn peak_area_scales_with_pair_rate_and_efficiency_product() {
    let base = SourceModel { pair_rate_per_mw: 200.0, uncorrelated_background_1: 0.0, uncorrelated_background_2: 0.0 };
    let det = quiet_detector();
    let a = peak_area(&base, &det, &det, 1);
    let doubled = peak_area(&SourceModel { pair_rate_per_mw: 400.0, ..base }, &det, &det, 2);
    assert!((doubled / a - 2.0).abs() < 0.1, "{a} {doubled}");
    let lossy1 = DetectorModel::new(0.5, 0.0, 0.0).unwrap();
    let lossy2 = DetectorModel::new(0.4, 0.0, 0.0).unwrap();
    let lossy = peak_area(&base, &lossy1, &lossy2, 3);
    assert!((lossy / a - 0.2).abs() < 0.02, "{a} {lossy}");
}

#[test]
fn tuned_configuration_reproduces_analytic_g2() {
    // R_c = 8.4 Hz with 2 kHz background per arm; bin width chosen so the formula gives 3.3.
    let det = DetectorModel::new(1.0, 0.0, 20e-12).unwrap();
    let pairs = 8.4;
    let bg = 2000.0;
    let source = SourceModel { pair_rate_per_mw: pairs, uncorrelated_background_1: bg, uncorrelated_background_2: bg };
    let (r1, r2) = expected_singles(&source, &det, &det, 1.0);
    let bw = pairs / (2.3 * r1 * r2);
    let analytic = analytic_g2_zero(pairs, r1, r2, bw).unwrap();
    assert!((analytic - 3.3).abs() < 1e-9);
    let duration = 3000.0;
    let (s1, s2) = simulate_time_tags(&source, &det, &det, 1.0, duration, 11).unwrap();
    let hist = coincidence_histogram(&s1, &s2, bw, 300.0 * bw, duration).unwrap();
    let g = g2_from_histogram(&hist, default_exclusion(&det, &det, bw)).unwrap();
    assert!((g.g2_zero - analytic).abs() <= 0.05 * analytic, "{} vs {analytic}", g.g2_zero);
}

#[test]
fn more_background_lowers_g2_zero() {
    let det = DetectorModel::new(0.5, 100.0, 50e-12).unwrap();
    let g2_with = |bg: f64| {
        let source = SourceModel { pair_rate_per_mw: 500.0, uncorrelated_background_1: bg, uncorrelated_background_2: bg };
        let (s1, s2) = simulate_time_tags(&source, &det, &det, 1.0, 200.0, 5).unwrap();
        let hist = coincidence_histogram(&s1, &s2, 1e-9, 200e-9, 200.0).unwrap();
        g2_from_histogram(&hist, default_exclusion(&det, &det, 1e-9)).unwrap().g2_zero
    };
    assert!(g2_with(40_000.0) < g2_with(20_000.0));
}

#[test]
fn sidebands_approach_one() {
    let det = DetectorModel::new(0.3, 1000.0, 100e-12).unwrap();
    let source = SourceModel { pair_rate_per_mw: 2000.0, uncorrelated_background_1: 5e4, uncorrelated_background_2: 5e4 };
    let (s1, s2) = simulate_time_tags(&source, &det, &det, 1.0, 50.0, 9).unwrap();
    let hist = coincidence_histogram(&s1, &s2, 2e-9, 400e-9, 50.0).unwrap();
    let g = g2_from_histogram(&hist, 4e-9).unwrap();
    let far: Vec<f64> = g.tau_axis.iter().zip(&g.g2).filter(|(t, _)| t.abs() > 100e-9).map(|(_, v)| *v).collect();
    let mean = far.iter().sum::<f64>() / far.len() as f64;
    assert!((mean - 1.0).abs() < 0.01);
    assert!(g.g2_zero > 1.5);
}

#[test]
fn zero_power_gives_no_excess_coincidences() {
    let det = DetectorModel::new(0.5, 2e4, 50e-12).unwrap();
    let source = SourceModel { pair_rate_per_mw: 100.0, uncorrelated_background_1: 2e4, uncorrelated_background_2: 2e4 };
    let duration = 200.0;
    let pts = power_sweep(&source, &det, &det, &[0.0], duration, 4, &HistogramSettings::default()).unwrap();
    // Accidentals per bin: R1 R2 Δt T; the peak spans three bins.
    let per_bin = 4e4 * 4e4 * 1e-9 * duration;
    let sigma_rate = (3.0 * per_bin).sqrt() / duration;
    assert!(pts[0].coincidence_rate.abs() <= 3.0 * sigma_rate, "{} vs σ {sigma_rate}", pts[0].coincidence_rate);
}
