use std::f64::consts::PI;
use std::path::Path;

use serde_json::{json, Value};

use spdc_core::dispersion::coherence_length;
use spdc_core::io::{self, fmt9};
use spdc_core::numeric::circle_grid;
use spdc_core::photon_stats::{
    analytic_g2_zero, coincidence_histogram, default_exclusion, expected_singles, g2_from_histogram, linear_fit,
    peak_coincidence_rate, power_sweep, simulate_time_tags, TimeTagStream,
};
use spdc_core::polarization::{
    bell_state, pair_state_from_pump, shg_intensity, state_to_density_matrix, Analyzer, BellState, ChiTensor,
    TwoPhotonState,
};
use spdc_core::spdc::{
    angular_emission_profile, band_omega_axis, collected_signal_spectrum, correlation_time_fs, counter_to_co_ratio,
    detection_angle_from_na, emission_bandwidth, frequency_angular_spectrum, full_omega_axis, joint_rate_grid,
    scenario_rates,
};
use spdc_core::tomography::{
    concurrence, fidelity, linear_reconstruct_with, mean_total_for_counts_per_setting, mle_reconstruct,
    simulate_counts_with, standard_16_settings, subtract_accidentals, MeasurementRecord,
};
use spdc_core::nm_from_omega;

use crate::config::RunConfig;
use crate::output::Output;
use crate::{in_op, BandwidthArgs, CliError, ShgArgs, SpectrumArgs};

fn thz(omega: f64) -> f64 {
    omega / (2.0 * PI) * 1e-12
}

pub fn spectrum(cfg: &RunConfig, args: &SpectrumArgs, out: &Output) -> Result<(), CliError> {
    let film = cfg.film()?;
    let pump = cfg.pump()?;
    let grid = cfg.grid()?;
    let omega_points = if args.joint { args.joint_omega_points } else { grid.omega_points };
    let omega = if args.full_range {
        full_omega_axis(&film, &pump, omega_points).map_err(in_op("spectrum"))?
    } else {
        cfg.windows()?;
        band_omega_axis(cfg.windows.band_nm, omega_points).map_err(in_op("spectrum"))?
    };
    if args.joint {
        if args.joint_theta_points < 8 {
            return Err(CliError::Validation("--joint-theta-points: must be at least 8".into()));
        }
        let thetas = circle_grid(args.joint_theta_points);
        let g = joint_rate_grid(&film, &pump, &omega, &thetas, &thetas).map_err(in_op("spectrum"))?;
        out.table("joint_spectrum.csv", true, |w| io::write_joint_grid_csv(w, &g))?;
        out.summary(&json!({
            "rows": g.values.len(),
            "omega_points": omega.len(),
            "theta_points": thetas.len(),
            "max_rate": g.values.iter().cloned().fold(0.0, f64::max),
        }));
    } else {
        let thetas = circle_grid(grid.theta_points);
        let s = frequency_angular_spectrum(&film, &pump, &omega, &thetas, grid.theta_points).map_err(in_op("spectrum"))?;
        out.table("spectrum.csv", true, |w| io::write_spectrum_csv(w, &s))?;
        out.summary(&json!({
            "rows": s.values.len(),
            "omega_points": omega.len(),
            "theta_points": thetas.len(),
            "max_rate": s.values.iter().cloned().fold(0.0, f64::max),
        }));
    }
    Ok(())
}

pub fn profile(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let film = cfg.film()?;
    let pump = cfg.pump()?;
    cfg.windows()?;
    let grid = cfg.grid()?;
    let p = angular_emission_profile(&film, &pump, cfg.windows.band_nm, &grid).map_err(in_op("profile"))?;
    out.table("profile.csv", true, |w| {
        writeln!(w, "theta_rad,signal,idler")?;
        for ((t, s), i) in p.theta_axis.iter().zip(&p.signal).zip(&p.idler) {
            writeln!(w, "{},{},{}", fmt9(*t), fmt9(*s), fmt9(*i))?;
        }
        Ok(())
    })?;
    let (fwd, bwd) = p.signal_forward_backward();
    out.summary(&json!({
        "layers": film.layer_count,
        "signal_forward_fraction": fwd,
        "signal_backward_fraction": bwd,
    }));
    Ok(())
}

pub fn scenarios(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let film = cfg.film()?;
    let pump = cfg.pump()?;
    let (fwd, bwd) = cfg.windows()?;
    let grid = cfg.grid()?;
    let r = scenario_rates(&film, &pump, &fwd, &bwd, &grid).map_err(in_op("scenarios"))?;
    let ratio = counter_to_co_ratio(&r);
    let value = json!({
        "layers": film.layer_count,
        "r_ff": r.r_ff,
        "r_fb": r.r_fb,
        "r_bf": r.r_bf,
        "r_bb": r.r_bb,
        "ratio": if ratio.unbounded { Value::Null } else { json!(ratio.value) },
        "unbounded": ratio.unbounded,
    });
    out.json_file("scenarios.json", &value)?;
    out.json_file(
        "summary.json",
        &json!({ "ratio": value["ratio"].clone(), "bandwidth_thz": Value::Null }),
    )?;
    out.report(&value);
    Ok(())
}

pub fn bandwidth(cfg: &RunConfig, args: &BandwidthArgs, out: &Output) -> Result<(), CliError> {
    let film = cfg.film()?;
    let pump = cfg.pump()?;
    let grid = cfg.grid()?;
    let degenerate_nm = 2.0 * pump.lambda_p_nm;
    let width = match args.na {
        Some(na) => detection_angle_from_na(na, &film.dispersion, degenerate_nm)
            .map_err(|e| CliError::Validation(format!("--na: {e}")))?,
        None => {
            let w = cfg.windows.angular_full_width_rad;
            if !(w > 0.0 && w < PI) {
                return Err(CliError::Validation(format!(
                    "windows.angular_full_width_rad: must lie in (0, π), got {w}"
                )));
            }
            w
        }
    };
    let axis = full_omega_axis(&film, &pump, grid.omega_points).map_err(in_op("bandwidth"))?;
    let spectrum = collected_signal_spectrum(&film, &pump, width, &axis, &grid).map_err(in_op("bandwidth"))?;
    out.table("collected_spectrum.csv", true, |w| {
        writeln!(w, "omega_thz,lambda_nm,collected")?;
        for (&o, &s) in axis.iter().zip(&spectrum) {
            writeln!(w, "{},{},{}", fmt9(thz(o)), fmt9(nm_from_omega(o)), fmt9(s))?;
        }
        Ok(())
    })?;
    let bw = emission_bandwidth(&film, &pump, width, Some(&axis), &grid).map_err(in_op("bandwidth"))?;
    let tau = correlation_time_fs(bw.thz).map_err(in_op("bandwidth"))?;
    let value = json!({
        "layers": film.layer_count,
        "collection_full_width_rad": width,
        "bandwidth_thz": bw.thz,
        "lower_thz": bw.lower_thz,
        "upper_thz": bw.upper_thz,
        "lambda_span_nm": bw.lambda_span_nm,
        "correlation_time_fs": tau,
    });
    out.json_file("summary.json", &value)?;
    out.summary(&value);
    Ok(())
}

pub fn coherence(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let film = cfg.film()?;
    let pump = cfg.pump()?;
    let degenerate_nm = 2.0 * pump.lambda_p_nm;
    if !film.dispersion.contains(degenerate_nm) {
        let [a, b] = film.dispersion.valid_wavelength_range;
        return Err(CliError::Validation(format!(
            "pump.lambda_nm: degenerate wavelength {degenerate_nm} nm lies outside the dispersion range [{a}, {b}] nm"
        )));
    }
    let lc = coherence_length(&film, pump.lambda_p_nm).map_err(in_op("coherence"))?;
    let thickness = film.thickness();
    let value = json!({
        "pump_nm": pump.lambda_p_nm,
        "coherence_length_um": if lc.phase_matched { Value::Null } else { json!(lc.meters * 1e6) },
        "phase_matched": lc.phase_matched,
        "layers": film.layer_count,
        "thickness_nm": thickness * 1e9,
        "thickness_over_coherence_length": if lc.phase_matched { 0.0 } else { thickness / lc.meters },
    });
    out.json_file("summary.json", &value)?;
    out.report(&value);
    Ok(())
}

pub fn simulate(cfg: &RunConfig, sweep: bool, out: &Output) -> Result<(), CliError> {
    let seed = cfg.seed()?;
    let source = cfg.source()?;
    let (d1, d2) = cfg.detectors()?;
    let duration = cfg.duration()?;
    let settings = cfg.histogram()?;
    if sweep {
        let powers = cfg.sweep_powers()?;
        let points = power_sweep(&source, &d1, &d2, &powers, duration, seed, &settings).map_err(in_op("simulate"))?;
        out.table("sweep.csv", true, |w| {
            writeln!(w, "power_mw,coincidence_rate_hz")?;
            for p in &points {
                writeln!(w, "{},{}", fmt9(p.power_mw), fmt9(p.coincidence_rate))?;
            }
            Ok(())
        })?;
        let fit = linear_fit(&points).map_err(in_op("simulate"))?;
        let value = json!({
            "seed": seed,
            "slope_hz_per_mw": fit.slope,
            "intercept_hz": fit.intercept,
            "r_squared": fit.r_squared,
        });
        out.json_file("summary.json", &value)?;
        out.summary(&value);
        return Ok(());
    }
    let power = non_negative_power(cfg)?;
    let (s1, s2) = simulate_time_tags(&source, &d1, &d2, power, duration, seed).map_err(in_op("simulate"))?;
    let hist = coincidence_histogram(&s1, &s2, settings.bin_width, settings.tau_half_range, duration)
        .map_err(in_op("simulate"))?;
    out.table("time_tags.csv", false, |w| io::write_time_tags_csv(w, &s1, &s2))?;
    out.table("histogram.csv", true, |w| io::write_histogram_csv(w, &hist))?;
    let exclusion = settings
        .exclusion_half_width
        .unwrap_or_else(|| default_exclusion(&d1, &d2, settings.bin_width));
    let value = json!({
        "seed": seed,
        "power_mw": power,
        "duration_s": duration,
        "tags_1": s1.len(),
        "tags_2": s2.len(),
        "coincidence_rate_hz": peak_coincidence_rate(&hist, exclusion).map_err(in_op("simulate"))?,
    });
    out.json_file("summary.json", &value)?;
    out.summary(&value);
    Ok(())
}

fn non_negative_power(cfg: &RunConfig) -> Result<f64, CliError> {
    let p = cfg.pump.power_mw;
    if p >= 0.0 && p.is_finite() {
        Ok(p)
    } else {
        Err(CliError::Validation(format!("pump.power_mw: must be non-negative and finite, got {p}")))
    }
}

/// `duration_flag` overrides the acquisition time of a recorded tag file,
/// which otherwise is taken as the latest tag.
pub fn g2(cfg: &RunConfig, tags: Option<&Path>, duration_flag: Option<f64>, out: &Output) -> Result<(), CliError> {
    let (d1, d2) = cfg.detectors()?;
    let settings = cfg.histogram()?;
    let (s1, s2, duration, analytic) = match tags {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Validation(format!("tag file not found: {}: {e}", path.display())))?;
            let (s1, s2) = io::read_time_tags_csv(file).map_err(in_op("reading time tags"))?;
            let duration = match duration_flag {
                Some(d) => d,
                None => latest(&s1).max(latest(&s2)),
            };
            if !(duration > 0.0) {
                return Err(CliError::Validation("time tags span no time; pass --duration-s".into()));
            }
            (s1, s2, duration, None)
        }
        None => {
            let seed = cfg.seed()?;
            let source = cfg.source()?;
            let duration = cfg.duration()?;
            let power = non_negative_power(cfg)?;
            let (s1, s2) = simulate_time_tags(&source, &d1, &d2, power, duration, seed).map_err(in_op("g2"))?;
            let (r1, r2) = expected_singles(&source, &d1, &d2, power);
            let rc = source.pair_rate_per_mw * power * d1.efficiency * d2.efficiency;
            let analytic = analytic_g2_zero(rc, r1, r2, settings.bin_width).ok();
            (s1, s2, duration, analytic)
        }
    };
    let hist = coincidence_histogram(&s1, &s2, settings.bin_width, settings.tau_half_range, duration)
        .map_err(in_op("g2"))?;
    let exclusion = settings
        .exclusion_half_width
        .unwrap_or_else(|| default_exclusion(&d1, &d2, settings.bin_width));
    let curve = g2_from_histogram(&hist, exclusion).map_err(in_op("g2"))?;
    out.table("g2.csv", true, |w| {
        writeln!(w, "tau_s,g2")?;
        for (t, g) in curve.tau_axis.iter().zip(&curve.g2) {
            writeln!(w, "{},{}", fmt9(*t), fmt9(*g))?;
        }
        Ok(())
    })?;
    out.table("histogram.csv", false, |w| io::write_histogram_csv(w, &hist))?;
    let value = json!({
        "g2_zero": curve.g2_zero,
        "analytic_g2_zero": analytic,
        "baseline_counts_per_bin": curve.baseline,
        "sideband_bins": curve.sideband_bins,
        "exclusion_half_width_s": exclusion,
        "duration_s": duration,
    });
    out.json_file("summary.json", &value)?;
    out.summary(&value);
    Ok(())
}

fn latest(s: &TimeTagStream) -> f64 {
    s.times().last().copied().unwrap_or(0.0)
}

fn target_state(cfg: &RunConfig) -> Result<TwoPhotonState, CliError> {
    let t = cfg.tomography.target.as_str();
    if t.eq_ignore_ascii_case("pump") {
        if !cfg.pump.theta_rad.is_finite() {
            return Err(CliError::Validation("pump.theta_rad: must be finite".into()));
        }
        return Ok(pair_state_from_pump(cfg.pump.theta_rad));
    }
    bell_state(t).map_err(|e| CliError::Validation(format!("tomography.target: {e}; or use pump")))
}

pub fn tomo(cfg: &RunConfig, list_settings: bool, out: &Output) -> Result<(), CliError> {
    let options = cfg.mle_options()?;
    if list_settings {
        out.report(&json!(standard_16_settings()
            .iter()
            .map(|(a, b)| format!("{a}{b}"))
            .collect::<Vec<_>>()));
        return Ok(());
    }
    let method = cfg.tomography.method.to_lowercase();
    if method != "mle" && method != "linear" {
        return Err(CliError::Validation(format!(
            "tomography.method: unknown method '{}'; use mle or linear",
            cfg.tomography.method
        )));
    }
    let accidentals = cfg.tomography.accidental_rate_hz;
    if !(accidentals >= 0.0 && accidentals.is_finite()) {
        return Err(CliError::Validation(format!(
            "tomography.accidental_rate_hz: must be non-negative and finite, got {accidentals}"
        )));
    }
    let target = target_state(cfg)?;
    let (records, simulated) = match &cfg.tomography.counts {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Validation(format!("counts file not found: {}: {e}", path.display())))?;
            (io::read_counts_csv(file).map_err(in_op("reading counts"))?, false)
        }
        None => {
            let seed = cfg.seed()?;
            let p = cfg.werner_p()?;
            let rho = state_to_density_matrix(&target)
                .and_then(|r| r.mix_with_white_noise(p))
                .map_err(in_op("tomo"))?;
            let settings = standard_16_settings();
            let mean_total = mean_total_for_counts_per_setting(&rho, &settings, cfg.counts_per_setting()?)
                .map_err(in_op("tomo"))?;
            let records =
                simulate_counts_with(&rho, &settings, mean_total, seed, options.handedness).map_err(in_op("tomo"))?;
            (records, true)
        }
    };
    if simulated {
        out.table("counts.csv", false, |w| io::write_counts_csv(w, &records))?;
    }
    let records: Vec<MeasurementRecord> = if accidentals > 0.0 {
        subtract_accidentals(&records, accidentals)
    } else {
        records
    };
    let value = if method == "mle" {
        let r = mle_reconstruct(&records, None, &options)
            .and_then(|r| r.with_target(&target))
            .map_err(in_op("tomo"))?;
        io::tomography_json(&r)
    } else {
        let rho = linear_reconstruct_with(&records, options.handedness).map_err(in_op("tomo"))?;
        let physical = rho.check().is_ok();
        json!({
            "rho": io::density_to_nested(&rho),
            "fidelity": fidelity(&rho, &target).ok(),
            "concurrence": concurrence(&rho).ok(),
            "purity": rho.purity(),
            "min_eigenvalue": rho.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min),
            "physical": physical,
        })
    };
    out.json_file("result.json", &value)?;
    out.report(&value);
    Ok(())
}

pub fn state(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let theta = cfg.pump.theta_rad;
    if !theta.is_finite() {
        return Err(CliError::Validation("pump.theta_rad: must be finite".into()));
    }
    let psi = pair_state_from_pump(theta);
    let amps: Vec<[f64; 2]> = psi.to_array().iter().map(|a| [a.re + 0.0, a.im + 0.0]).collect();
    let mut fidelities = serde_json::Map::new();
    for b in BellState::ALL {
        fidelities.insert(b.name().to_string(), json!(psi.overlap(&b.state())));
    }
    let rho = state_to_density_matrix(&psi).map_err(in_op("state"))?;
    let value = json!({
        "theta_rad": theta,
        "basis": ["HH", "HV", "VH", "VV"],
        "amplitudes": amps,
        "bell_fidelities": fidelities,
        "concurrence": concurrence(&rho).map_err(in_op("state"))?,
    });
    out.json_file("state.json", &value)?;
    out.report(&value);
    Ok(())
}

pub fn shg(args: &ShgArgs, out: &Output) -> Result<(), CliError> {
    if args.points < 2 {
        return Err(CliError::Validation("--points: must be at least 2".into()));
    }
    if !(args.d.is_finite()) {
        return Err(CliError::Validation("--d: must be finite".into()));
    }
    let tensor = ChiTensor::new(args.d);
    let step = 2.0 * PI / args.points as f64;
    let rows: Vec<[f64; 3]> = (0..args.points)
        .map(|k| {
            let t = k as f64 * step;
            [
                t,
                shg_intensity(&tensor, t, Analyzer::Parallel),
                shg_intensity(&tensor, t, Analyzer::Perpendicular),
            ]
        })
        .collect();
    out.table("shg.csv", true, |w| {
        writeln!(w, "theta_rad,parallel,perpendicular")?;
        for r in &rows {
            writeln!(w, "{},{},{}", fmt9(r[0]), fmt9(r[1]), fmt9(r[2]))?;
        }
        Ok(())
    })?;
    out.summary(&json!({ "points": args.points, "max_parallel": args.d * args.d }));
    Ok(())
}
