//! Pair-emission rate model for a thin χ(2) film and the spectra derived
//! from it.
//!
//! The rate density of a signal photon at angular frequency `ω_s` and
//! in-plane angle `θ_s` with its idler at `θ_i` (energy conservation fixes
//! `ω_i = ω_p − ω_s`) is
//!
//! ```text
//! R = χ² L² sinc²(Δk∥ L / 2) exp(−(Δk⊥ w0)² / 2)
//! Δk∥ = k_p − k_s cos θ_s − k_i cos θ_i
//! Δk⊥ = k_s sin θ_s + k_i sin θ_i
//! ```
//!
//! in arbitrary units. Angles are signed polar angles in the plane of
//! incidence, measured from the pump direction; `|θ| < π/2` is forward.
//! All integrals use the trapezoidal rule on uniform grids.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, NonlinearFilm};
use crate::numeric::{circle_grid, linspace, sinc, trapezoid_weights, wrap_angle, NeumaierSum};
use crate::{nm_from_omega, omega_from_nm, Error, Result};

/// Exponent beyond which `exp(-x)` underflows to exactly zero.
const EXP_UNDERFLOW: f64 = 746.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpBeam {
    pub lambda_p_nm: f64,
    pub waist_m: f64,
    pub power_w: f64,
    /// Polarization angle measured from the armchair axis, radians.
    pub polarization_angle: f64,
}

impl PumpBeam {
    pub fn new(lambda_p_nm: f64, waist_m: f64, power_w: f64, polarization_angle: f64) -> Result<Self> {
        if !(lambda_p_nm > 0.0 && lambda_p_nm.is_finite()) {
            return Err(Error::domain(format!("pump wavelength must be positive, got {lambda_p_nm} nm")));
        }
        if !(waist_m > 0.0 && waist_m.is_finite()) {
            return Err(Error::domain(format!("pump waist must be positive, got {waist_m} m")));
        }
        if !(power_w >= 0.0 && power_w.is_finite()) {
            return Err(Error::domain(format!("pump power must be non-negative, got {power_w} W")));
        }
        Ok(Self {
            lambda_p_nm,
            waist_m,
            power_w,
            polarization_angle,
        })
    }

    /// 775 nm, 10 μm waist, 40 mW, polarized along armchair.
    pub fn reference() -> Self {
        Self {
            lambda_p_nm: 775.0,
            waist_m: 10e-6,
            power_w: 0.040,
            polarization_angle: 0.0,
        }
    }

    pub fn omega(&self) -> f64 {
        omega_from_nm(self.lambda_p_nm)
    }
}

/// In-plane emission angle normalized to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionDirection(f64);

impl EmissionDirection {
    pub fn new(theta: f64) -> Self {
        Self(wrap_angle(theta))
    }

    pub fn forward() -> Self {
        Self(0.0)
    }

    pub fn backward() -> Self {
        Self(PI)
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    pub fn is_forward(self) -> bool {
        self.0.abs() < 0.5 * PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionWindow {
    pub center: EmissionDirection,
    /// Full angular width of the collection box, radians.
    pub angular_full_width: f64,
    /// Vacuum wavelength band `[min, max]` in nm.
    pub lambda_band_nm: [f64; 2],
}

impl DetectionWindow {
    pub fn new(center: EmissionDirection, angular_full_width: f64, lambda_band_nm: [f64; 2]) -> Result<Self> {
        let w = Self {
            center,
            angular_full_width,
            lambda_band_nm,
        };
        w.validate()?;
        Ok(w)
    }

    /// 0.2 rad boxes and the 1460–1650 nm band, forward and backward.
    pub fn reference_pair() -> (Self, Self) {
        let band = [1460.0, 1650.0];
        (
            Self {
                center: EmissionDirection::forward(),
                angular_full_width: 0.2,
                lambda_band_nm: band,
            },
            Self {
                center: EmissionDirection::backward(),
                angular_full_width: 0.2,
                lambda_band_nm: band,
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.angular_full_width > 0.0 && self.angular_full_width < PI) {
            return Err(Error::domain(format!(
                "angular_full_width must lie in (0, π), got {}",
                self.angular_full_width
            )));
        }
        let [a, b] = self.lambda_band_nm;
        if !(a > 0.0 && a < b) {
            return Err(Error::domain(format!("wavelength band must satisfy 0 < min < max, got [{a}, {b}]")));
        }
        Ok(())
    }
}

/// Grid resolutions for the numerical integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Points along the signal-frequency axis.
    pub omega_points: usize,
    /// Points on the full circle for angular marginals and profiles.
    pub theta_points: usize,
    /// Points across one detection box.
    pub box_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            omega_points: 512,
            theta_points: 720,
            box_points: 97,
        }
    }
}

impl GridSpec {
    pub fn refined(&self) -> Self {
        Self {
            omega_points: 2 * self.omega_points,
            theta_points: 2 * self.theta_points,
            box_points: 2 * self.box_points - 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega_points < 2 || self.box_points < 2 {
            return Err(Error::domain("omega_points and box_points must be at least 2"));
        }
        if self.theta_points < 8 || !self.theta_points.is_multiple_of(2) {
            return Err(Error::domain("theta_points must be even and at least 8"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    pub parallel: f64,
    pub perpendicular: f64,
}

pub fn phase_matching_factor(delta_k_par: f64, thickness: f64) -> f64 {
    let s = sinc(0.5 * delta_k_par * thickness);
    s * s
}

pub fn pump_factor(delta_k_perp: f64, waist: f64) -> f64 {
    let a = delta_k_perp * waist;
    (-0.5 * a * a).exp()
}

/// Frequency-dependent part of the rate: the three wavevector magnitudes.
#[derive(Debug, Clone, Copy)]
struct SpectralPoint {
    k_s: f64,
    k_i: f64,
}

/// Everything in the rate density that does not depend on the sample point.
#[derive(Debug, Clone, Copy)]
struct RateKernel {
    k_p: f64,
    omega_p: f64,
    thickness: f64,
    waist: f64,
    prefactor: f64,
}

impl RateKernel {
    fn new(film: &NonlinearFilm, pump: &PumpBeam) -> Result<Self> {
        let omega_p = pump.omega();
        let thickness = film.thickness();
        Ok(Self {
            k_p: film.dispersion.wavevector_magnitude(omega_p)?,
            omega_p,
            thickness,
            waist: pump.waist_m,
            prefactor: film.chi2_magnitude.powi(2) * thickness * thickness,
        })
    }

    fn point(&self, model: &DispersionModel, omega_s: f64) -> Result<SpectralPoint> {
        let omega_i = self.omega_p - omega_s;
        if !(omega_s > 0.0) {
            return Err(Error::domain(format!("signal frequency must be positive, got {omega_s} rad/s")));
        }
        if !(omega_i > 0.0) {
            return Err(Error::domain(format!(
                "idler frequency nonpositive: signal ω = {omega_s:.6e} rad/s is not below the pump ω = {:.6e} rad/s",
                self.omega_p
            )));
        }
        Ok(SpectralPoint {
            k_s: model.wavevector_magnitude(omega_s)?,
            k_i: model.wavevector_magnitude(omega_i)?,
        })
    }

    #[inline]
    fn mismatch(&self, p: SpectralPoint, s: Angle, i: Angle) -> Mismatch {
        Mismatch {
            parallel: self.k_p - p.k_s * s.cos - p.k_i * i.cos,
            perpendicular: p.k_s * s.sin + p.k_i * i.sin,
        }
    }

    #[inline]
    fn density(&self, p: SpectralPoint, s: Angle, i: Angle) -> f64 {
        let dk = self.mismatch(p, s, i);
        let a = dk.perpendicular * self.waist;
        let expo = 0.5 * a * a;
        if expo > EXP_UNDERFLOW {
            return 0.0;
        }
        self.prefactor * phase_matching_factor(dk.parallel, self.thickness) * (-expo).exp()
    }
}

#[derive(Debug, Clone, Copy)]
struct Angle {
    cos: f64,
    sin: f64,
}

impl Angle {
    fn new(theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        Self { cos, sin }
    }
}

fn angles(thetas: &[f64]) -> Vec<Angle> {
    thetas.iter().map(|&t| Angle::new(t)).collect()
}

/// Longitudinal and transverse wavevector mismatch in rad/m.
pub fn mismatch(film: &NonlinearFilm, pump: &PumpBeam, omega_s: f64, theta_s: f64, theta_i: f64) -> Result<Mismatch> {
    let kernel = RateKernel::new(film, pump)?;
    let p = kernel.point(&film.dispersion, omega_s)?;
    Ok(kernel.mismatch(p, Angle::new(theta_s), Angle::new(theta_i)))
}

/// Pair-emission rate density (arbitrary units, proportionality constant 1).
pub fn pair_rate_density(film: &NonlinearFilm, pump: &PumpBeam, omega_s: f64, theta_s: f64, theta_i: f64) -> Result<f64> {
    let kernel = RateKernel::new(film, pump)?;
    let p = kernel.point(&film.dispersion, omega_s)?;
    Ok(kernel.density(p, Angle::new(theta_s), Angle::new(theta_i)))
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::domain(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

/// Sampled rate density over (signal frequency, signal angle, idler angle).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointRateGrid {
    pub omega_s_axis: Vec<f64>,
    pub theta_s_axis: Vec<f64>,
    pub theta_i_axis: Vec<f64>,
    /// Row-major `[omega][theta_s][theta_i]`.
    pub values: Vec<f64>,
}

impl JointRateGrid {
    pub fn get(&self, w: usize, s: usize, i: usize) -> f64 {
        let ns = self.theta_s_axis.len();
        let ni = self.theta_i_axis.len();
        self.values[(w * ns + s) * ni + i]
    }
}

pub fn joint_rate_grid(
    film: &NonlinearFilm,
    pump: &PumpBeam,
    omega_s_axis: &[f64],
    theta_s_axis: &[f64],
    theta_i_axis: &[f64],
) -> Result<JointRateGrid> {
    check_axis("omega_s", omega_s_axis)?;
    check_axis("theta_s", theta_s_axis)?;
    check_axis("theta_i", theta_i_axis)?;
    let kernel = RateKernel::new(film, pump)?;
    let points = omega_s_axis
        .iter()
        .map(|&w| kernel.point(&film.dispersion, w))
        .collect::<Result<Vec<_>>>()?;
    let sa = angles(theta_s_axis);
    let ia = angles(theta_i_axis);
    let values: Vec<f64> = points
        .par_iter()
        .flat_map_iter(|&p| {
            let ia = &ia;
            sa.iter()
                .flat_map(move |&s| ia.iter().map(move |&i| kernel.density(p, s, i)))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(JointRateGrid {
        omega_s_axis: omega_s_axis.to_vec(),
        theta_s_axis: theta_s_axis.to_vec(),
        theta_i_axis: theta_i_axis.to_vec(),
        values,
    })
}

/// Rate density of one photon marginalized over its partner's angle on the
/// full circle, `S(ω_s, θ_s) = ∫ R dθ_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyAngularSpectrum {
    pub omega_axis: Vec<f64>,
    pub theta_axis: Vec<f64>,
    /// Row-major `[omega][theta]`.
    pub values: Vec<f64>,
}

impl FrequencyAngularSpectrum {
    pub fn get(&self, w: usize, t: usize) -> f64 {
        self.values[w * self.theta_axis.len() + t]
    }

    pub fn row(&self, w: usize) -> &[f64] {
        let n = self.theta_axis.len();
        &self.values[w * n..(w + 1) * n]
    }
}

/// Integrate the density over the partner angle on a periodic grid.
fn partner_marginal(kernel: &RateKernel, p: SpectralPoint, own: Angle, partner: &[Angle], h: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for &i in partner {
        acc.add(kernel.density(p, own, i));
    }
    acc.total() * h
}

pub fn frequency_angular_spectrum(
    film: &NonlinearFilm,
    pump: &PumpBeam,
    omega_axis: &[f64],
    theta_axis: &[f64],
    theta_i_points: usize,
) -> Result<FrequencyAngularSpectrum> {
    check_axis("omega", omega_axis)?;
    check_axis("theta", theta_axis)?;
    if theta_i_points < 8 {
        return Err(Error::domain("theta_i_points must be at least 8"));
    }
    let kernel = RateKernel::new(film, pump)?;
    let points = omega_axis
        .iter()
        .map(|&w| kernel.point(&film.dispersion, w))
        .collect::<Result<Vec<_>>>()?;
    let own = angles(theta_axis);
    let partner = angles(&circle_grid(theta_i_points));
    let h = 2.0 * PI / theta_i_points as f64;
    let values: Vec<f64> = points
        .par_iter()
        .flat_map_iter(|&p| {
            own.iter()
                .map(|&s| partner_marginal(&kernel, p, s, &partner, h))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(FrequencyAngularSpectrum {
        omega_axis: omega_axis.to_vec(),
        theta_axis: theta_axis.to_vec(),
        values,
    })
}

/// Uniform signal-frequency grid covering a vacuum wavelength band.
pub fn band_omega_axis(band_nm: [f64; 2], points: usize) -> Result<Vec<f64>> {
    let [a, b] = band_nm;
    if !(a > 0.0 && a < b) {
        return Err(Error::domain(format!("empty or inverted wavelength band [{a}, {b}] nm")));
    }
    Ok(linspace(omega_from_nm(b), omega_from_nm(a), points.max(2)))
}

/// Signal frequencies over which both photons stay inside the dispersion
/// model's validity range.
pub fn full_omega_axis(film: &NonlinearFilm, pump: &PumpBeam, points: usize) -> Result<Vec<f64>> {
    let [lo, hi] = film.dispersion.valid_wavelength_range;
    let omega_p = pump.omega();
    let w_min = omega_from_nm(hi).max(omega_p - omega_from_nm(lo));
    let w_max = omega_from_nm(lo).min(omega_p - omega_from_nm(hi));
    if !(w_min < w_max) {
        return Err(Error::domain(format!(
            "no signal frequency keeps both photons inside [{lo}, {hi}] nm for a {} nm pump",
            pump.lambda_p_nm
        )));
    }
    // Pull the edges in by a hair so rounding cannot push a photon out of range.
    let eps = 1e-9 * (w_max - w_min);
    Ok(linspace(w_min + eps, w_max - eps, points.max(2)))
}

/// Normalized signal and idler angular emission profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularProfile {
    pub theta_axis: Vec<f64>,
    pub signal: Vec<f64>,
    pub idler: Vec<f64>,
}

impl AngularProfile {
    /// Trapezoid integrals of the signal profile over forward and backward
    /// half-planes.
    pub fn signal_forward_backward(&self) -> (f64, f64) {
        let h = 2.0 * PI / self.theta_axis.len() as f64;
        let mut fwd = NeumaierSum::new();
        let mut bwd = NeumaierSum::new();
        for (&t, &v) in self.theta_axis.iter().zip(&self.signal) {
            if t.abs() < 0.5 * PI {
                fwd.add(v * h);
            } else {
                bwd.add(v * h);
            }
        }
        (fwd.total(), bwd.total())
    }
}

/// Profile of one photon at frequencies `omega_own` (trapezoid weights
/// `w_omega`), integrated over the partner's angle.
fn integrated_profile(
    kernel: &RateKernel,
    model: &DispersionModel,
    omega_signal: &[f64],
    w_omega: &[f64],
    thetas: &[Angle],
    partner: &[Angle],
    h: f64,
    idler_role: bool,
) -> Result<Vec<f64>> {
    let points = omega_signal
        .iter()
        .map(|&w| kernel.point(model, w))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .zip(w_omega.par_iter())
        .map(|(&p, &wt)| {
            thetas
                .iter()
                .map(|&own| {
                    let mut acc = NeumaierSum::new();
                    for &other in partner {
                        let d = if idler_role {
                            kernel.density(p, other, own)
                        } else {
                            kernel.density(p, own, other)
                        };
                        acc.add(d);
                    }
                    acc.total() * h * wt
                })
                .collect()
        })
        .collect();
    let mut out = vec![NeumaierSum::new(); thetas.len()];
    for row in &rows {
        for (acc, v) in out.iter_mut().zip(row) {
            acc.add(*v);
        }
    }
    Ok(out.iter().map(|a| a.total()).collect())
}

fn normalize_max(v: &mut [f64]) {
    let m = v.iter().cloned().fold(0.0f64, f64::max);
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

/// Angular emission profiles `P_s(θ)` and `P_i(θ)` for photons whose own
/// wavelength lies in `band_nm`, each normalized to a maximum of one.
pub fn angular_emission_profile(film: &NonlinearFilm, pump: &PumpBeam, band_nm: [f64; 2], grid: &GridSpec) -> Result<AngularProfile> {
    grid.validate()?;
    let kernel = RateKernel::new(film, pump)?;
    let omega_band = band_omega_axis(band_nm, grid.omega_points)?;
    let w_omega = trapezoid_weights(omega_band.len(), omega_band[1] - omega_band[0]);
    let theta_axis = circle_grid(grid.theta_points);
    let th = angles(&theta_axis);
    let h = 2.0 * PI / grid.theta_points as f64;

    let mut signal = integrated_profile(&kernel, &film.dispersion, &omega_band, &w_omega, &th, &th, h, false)?;
    // Idler in band: signal frequency is the complement, reversed to stay increasing.
    let omega_s_for_idler: Vec<f64> = omega_band.iter().rev().map(|w| kernel.omega_p - w).collect();
    let mut idler = integrated_profile(&kernel, &film.dispersion, &omega_s_for_idler, &w_omega, &th, &th, h, true)?;
    normalize_max(&mut signal);
    normalize_max(&mut idler);
    Ok(AngularProfile {
        theta_axis,
        signal,
        idler,
    })
}

/// Integrated rates for the four propagation scenarios (I–IV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRates {
    /// Signal forward, idler forward.
    pub r_ff: f64,
    /// Signal forward, idler backward.
    pub r_fb: f64,
    /// Signal backward, idler forward.
    pub r_bf: f64,
    /// Signal backward, idler backward.
    pub r_bb: f64,
}

fn box_grid(window: &DetectionWindow, points: usize) -> (Vec<f64>, Vec<f64>) {
    let c = window.center.theta();
    let half = 0.5 * window.angular_full_width;
    let thetas = linspace(c - half, c + half, points);
    let w = trapezoid_weights(points, thetas[1] - thetas[0]);
    (thetas, w)
}

fn box_integral(
    kernel: &RateKernel,
    model: &DispersionModel,
    signal_window: &DetectionWindow,
    idler_window: &DetectionWindow,
    grid: &GridSpec,
) -> Result<f64> {
    let omega = band_omega_axis(signal_window.lambda_band_nm, grid.omega_points)?;
    let w_omega = trapezoid_weights(omega.len(), omega[1] - omega[0]);
    let (ts, ws) = box_grid(signal_window, grid.box_points);
    let (ti, wi) = box_grid(idler_window, grid.box_points);
    let sa = angles(&ts);
    let ia = angles(&ti);
    let points = omega
        .iter()
        .map(|&w| kernel.point(model, w))
        .collect::<Result<Vec<_>>>()?;
    let per_omega: Vec<f64> = points
        .par_iter()
        .zip(w_omega.par_iter())
        .map(|(&p, &wt)| {
            let mut acc = NeumaierSum::new();
            for (&s, &w_s) in sa.iter().zip(&ws) {
                for (&i, &w_i) in ia.iter().zip(&wi) {
                    acc.add(kernel.density(p, s, i) * w_s * w_i);
                }
            }
            acc.total() * wt
        })
        .collect();
    Ok(per_omega.into_iter().collect::<NeumaierSum>().total())
}

pub fn scenario_rates(
    film: &NonlinearFilm,
    pump: &PumpBeam,
    forward: &DetectionWindow,
    backward: &DetectionWindow,
    grid: &GridSpec,
) -> Result<ScenarioRates> {
    forward.validate()?;
    backward.validate()?;
    grid.validate()?;
    let kernel = RateKernel::new(film, pump)?;
    let m = &film.dispersion;
    Ok(ScenarioRates {
        r_ff: box_integral(&kernel, m, forward, forward, grid)?,
        r_fb: box_integral(&kernel, m, forward, backward, grid)?,
        r_bf: box_integral(&kernel, m, backward, forward, grid)?,
        r_bb: box_integral(&kernel, m, backward, backward, grid)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRatio {
    /// `f64::INFINITY` when `unbounded` is set.
    pub value: f64,
    pub unbounded: bool,
}

/// `(r_fb + r_bf) / r_ff`.
pub fn counter_to_co_ratio(rates: &ScenarioRates) -> RateRatio {
    if rates.r_ff <= 0.0 {
        return RateRatio {
            value: f64::INFINITY,
            unbounded: true,
        };
    }
    RateRatio {
        value: (rates.r_fb + rates.r_bf) / rates.r_ff,
        unbounded: false,
    }
}

/// Full width at half maximum of the collected signal spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bandwidth {
    pub thz: f64,
    pub lower_thz: f64,
    pub upper_thz: f64,
    /// Wavelength span between the two half-maximum points, nm.
    pub lambda_span_nm: f64,
}

/// Collected signal spectral density `S(ω_s)` over `|θ_s| ≤ width/2` with
/// the idler marginalized over the full circle, normalized to one at the
/// degenerate frequency.
pub fn collected_signal_spectrum(
    film: &NonlinearFilm,
    pump: &PumpBeam,
    collection_full_width: f64,
    omega_axis: &[f64],
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    if !(collection_full_width > 0.0) {
        return Err(Error::domain(format!(
            "collection_full_width must be positive, got {collection_full_width}"
        )));
    }
    grid.validate()?;
    check_axis("omega", omega_axis)?;
    let kernel = RateKernel::new(film, pump)?;
    let window = DetectionWindow {
        center: EmissionDirection::forward(),
        angular_full_width: collection_full_width,
        lambda_band_nm: [1.0, 2.0],
    };
    let (ts, ws) = box_grid(&window, grid.box_points);
    let sa = angles(&ts);
    let partner = angles(&circle_grid(grid.theta_points));
    let h = 2.0 * PI / grid.theta_points as f64;
    let collected = |omega: f64| -> Result<f64> {
        let p = kernel.point(&film.dispersion, omega)?;
        let mut acc = NeumaierSum::new();
        for (&s, &w) in sa.iter().zip(&ws) {
            acc.add(partner_marginal(&kernel, p, s, &partner, h) * w);
        }
        Ok(acc.total())
    };
    let reference = collected(0.5 * kernel.omega_p)?;
    if !(reference > 0.0) {
        return Err(Error::Numerical("collected spectrum vanishes at the degenerate frequency".into()));
    }
    omega_axis
        .par_iter()
        .map(|&w| collected(w).map(|v| v / reference))
        .collect()
}

pub fn emission_bandwidth(
    film: &NonlinearFilm,
    pump: &PumpBeam,
    collection_full_width: f64,
    omega_axis: Option<&[f64]>,
    grid: &GridSpec,
) -> Result<Bandwidth> {
    let owned;
    let axis = match omega_axis {
        Some(a) => a,
        None => {
            owned = full_omega_axis(film, pump, grid.omega_points)?;
            &owned
        }
    };
    let spectrum = collected_signal_spectrum(film, pump, collection_full_width, axis, grid)?;
    let omega_d = 0.5 * pump.omega();
    let start = axis.partition_point(|&w| w < omega_d);
    if start == 0 || start >= axis.len() {
        return Err(Error::domain(
            "frequency grid does not bracket the degenerate frequency; widen the grid",
        ));
    }
    let crossing = |range: &mut dyn Iterator<Item = usize>, step_back: isize| -> Option<f64> {
        for j in range {
            if spectrum[j] <= 0.5 {
                let k = (j as isize + step_back) as usize;
                let (w0, w1, s0, s1) = (axis[k], axis[j], spectrum[k], spectrum[j]);
                return Some(w0 + (0.5 - s0) * (w1 - w0) / (s1 - s0));
            }
        }
        None
    };
    let upper = crossing(&mut (start..axis.len()), -1);
    let lower = crossing(&mut (0..start).rev(), 1);
    match (lower, upper) {
        (Some(lo), Some(hi)) => {
            let to_thz = |w: f64| w / (2.0 * PI) * 1e-12;
            Ok(Bandwidth {
                thz: to_thz(hi - lo),
                lower_thz: to_thz(lo),
                upper_thz: to_thz(hi),
                lambda_span_nm: nm_from_omega(lo) - nm_from_omega(hi),
            })
        }
        _ => {
            let (a, b) = (axis[0], axis[axis.len() - 1]);
            Err(Error::Numerical(format!(
                "collected spectrum has no half-maximum crossing on the {} side of degeneracy within [{:.1}, {:.1}] nm; use a wider frequency grid",
                if lower.is_none() { "low-frequency" } else { "high-frequency" },
                nm_from_omega(b),
                nm_from_omega(a)
            )))
        }
    }
}

/// Biphoton correlation time `1 / (π Δν)` in femtoseconds, for a
/// Lorentzian spectrum of FWHM `Δν` (THz).
pub fn correlation_time_fs(bandwidth_thz: f64) -> Result<f64> {
    if !(bandwidth_thz > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth_thz} THz")));
    }
    Ok(1e3 / (PI * bandwidth_thz))
}

/// Collection angle inside the film, `NA / n(λ)`; used as the full width
/// of the detection box.
pub fn detection_angle_from_na(na: f64, model: &DispersionModel, lambda_nm: f64) -> Result<f64> {
    let n = model.refractive_index(lambda_nm)?;
    if !(na >= 0.0 && na < n) {
        return Err(Error::domain(format!(
            "numerical aperture {na} must satisfy 0 <= NA < n = {n:.4}"
        )));
    }
    Ok(na / n)
}
