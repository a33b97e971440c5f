//! Run configuration: one TOML file, every section optional.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use spdc_core::dispersion::{DispersionModel, NonlinearFilm};
use spdc_core::photon_stats::{DetectorModel, HistogramSettings, SourceModel};
use spdc_core::spdc::{DetectionWindow, EmissionDirection, GridSpec, PumpBeam};
use spdc_core::tomography::{Handedness, MleOptions};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub film: FilmConfig,
    pub pump: PumpConfig,
    pub windows: WindowConfig,
    pub grids: GridConfig,
    pub simulation: SimulationConfig,
    pub tomography: TomographyConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilmConfig {
    pub layer_count: u32,
    pub chi2: f64,
    /// TOML file with `coefficients` and `range_nm`; the built-in model when absent.
    pub dispersion_file: Option<PathBuf>,
}

impl Default for FilmConfig {
    fn default() -> Self {
        Self {
            layer_count: 1,
            chi2: 1.0,
            dispersion_file: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpConfig {
    pub lambda_nm: f64,
    pub waist_m: f64,
    pub power_mw: f64,
    pub theta_rad: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            lambda_nm: 775.0,
            waist_m: 10e-6,
            power_mw: 40.0,
            theta_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub angular_full_width_rad: f64,
    pub band_nm: [f64; 2],
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            angular_full_width_rad: 0.2,
            band_nm: [1460.0, 1650.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub omega_points: usize,
    pub theta_points: usize,
    pub box_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            omega_points: g.omega_points,
            theta_points: g.theta_points,
            box_points: g.box_points,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: Option<u64>,
    pub pair_rate_per_mw: f64,
    pub background_1_hz: f64,
    pub background_2_hz: f64,
    pub efficiency_1: f64,
    pub efficiency_2: f64,
    pub dark_rate_1_hz: f64,
    pub dark_rate_2_hz: f64,
    pub jitter_1_s: f64,
    pub jitter_2_s: f64,
    pub duration_s: f64,
    pub bin_width_s: f64,
    pub tau_half_range_s: f64,
    pub exclusion_half_width_s: Option<f64>,
    pub sweep_powers_mw: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: None,
            pair_rate_per_mw: 10.0,
            background_1_hz: 0.0,
            background_2_hz: 0.0,
            efficiency_1: 0.5,
            efficiency_2: 0.5,
            dark_rate_1_hz: 100.0,
            dark_rate_2_hz: 100.0,
            jitter_1_s: 50e-12,
            jitter_2_s: 50e-12,
            duration_s: 1000.0,
            bin_width_s: 1e-9,
            tau_half_range_s: 100e-9,
            exclusion_half_width_s: None,
            sweep_powers_mw: vec![5.0, 10.0, 20.0, 30.0, 40.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    /// Measured counts; when absent counts are simulated.
    pub counts: Option<PathBuf>,
    pub werner_p: f64,
    pub counts_per_setting: f64,
    /// `pump` for the pump-angle state or a Bell-state name.
    pub target: String,
    pub method: String,
    pub handedness: Handedness,
    pub accidental_rate_hz: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        let mle = MleOptions::default();
        Self {
            counts: None,
            werner_p: 1.0,
            counts_per_setting: 1e5,
            target: "pump".to_string(),
            method: "mle".to_string(),
            handedness: mle.handedness,
            accidental_rate_hz: 0.0,
            max_iterations: mle.max_iterations,
            tolerance: mle.tolerance,
        }
    }
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {msg}"))
}

fn positive(path: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(path, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(path, format!("must be non-negative and finite, got {v}")))
    }
}

fn fraction(path: &str, v: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(path, format!("must lie in [0, 1], got {v}")))
    }
}

impl RunConfig {
    /// Read a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config file {}: {e}", path.display())))?;
        let bad = |msg: String| CliError::Validation(format!("config file {}: {msg}", path.display()));
        let de = toml::de::Deserializer::parse(&text).map_err(|e| bad(e.to_string()))?;
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            bad(format!("{field}: {}", e.into_inner().message()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.film.dispersion_file, &mut cfg.tomography.counts].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn dispersion(&self) -> Result<DispersionModel, CliError> {
        match &self.film.dispersion_file {
            None => Ok(DispersionModel::gase()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| invalid("film.dispersion_file", format!("cannot read {}: {e}", p.display())))?;
                DispersionModel::from_toml_str(&text).map_err(|e| invalid("film.dispersion_file", e))
            }
        }
    }

    pub fn film(&self) -> Result<NonlinearFilm, CliError> {
        if self.film.layer_count == 0 {
            return Err(invalid("film.layer_count", "must be at least 1"));
        }
        positive("film.chi2", self.film.chi2)?;
        NonlinearFilm::new(self.film.layer_count, self.film.chi2, self.dispersion()?).map_err(|e| invalid("film", e))
    }

    pub fn pump(&self) -> Result<PumpBeam, CliError> {
        let p = &self.pump;
        positive("pump.lambda_nm", p.lambda_nm)?;
        positive("pump.waist_m", p.waist_m)?;
        non_negative("pump.power_mw", p.power_mw)?;
        if !p.theta_rad.is_finite() {
            return Err(invalid("pump.theta_rad", "must be finite"));
        }
        let model = self.dispersion()?;
        if !model.contains(p.lambda_nm) {
            let [a, b] = model.valid_wavelength_range;
            return Err(invalid("pump.lambda_nm", format!("{} nm lies outside the dispersion range [{a}, {b}] nm", p.lambda_nm)));
        }
        PumpBeam::new(p.lambda_nm, p.waist_m, p.power_mw * 1e-3, p.theta_rad).map_err(|e| invalid("pump", e))
    }

    pub fn windows(&self) -> Result<(DetectionWindow, DetectionWindow), CliError> {
        let w = &self.windows;
        if !(w.angular_full_width_rad > 0.0 && w.angular_full_width_rad < std::f64::consts::PI) {
            return Err(invalid("windows.angular_full_width_rad", format!("must lie in (0, π), got {}", w.angular_full_width_rad)));
        }
        let [a, b] = w.band_nm;
        if !(a > 0.0 && a < b) {
            return Err(invalid("windows.band_nm", format!("must satisfy 0 < min < max, got [{a}, {b}]")));
        }
        let model = self.dispersion()?;
        if !(model.contains(a) && model.contains(b)) {
            let [lo, hi] = model.valid_wavelength_range;
            return Err(invalid("windows.band_nm", format!("[{a}, {b}] nm must lie inside the dispersion range [{lo}, {hi}] nm")));
        }
        let pump = self.pump()?;
        if a <= pump.lambda_p_nm {
            return Err(invalid("windows.band_nm", format!("signal band must lie above the pump wavelength {} nm", pump.lambda_p_nm)));
        }
        let make = |center| DetectionWindow::new(center, w.angular_full_width_rad, w.band_nm).map_err(|e| invalid("windows", e));
        Ok((make(EmissionDirection::forward())?, make(EmissionDirection::backward())?))
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        let g = &self.grids;
        if g.omega_points < 2 {
            return Err(invalid("grids.omega_points", format!("must be at least 2, got {}", g.omega_points)));
        }
        if g.theta_points < 8 || !g.theta_points.is_multiple_of(2) {
            return Err(invalid("grids.theta_points", format!("must be even and at least 8, got {}", g.theta_points)));
        }
        if g.box_points < 2 {
            return Err(invalid("grids.box_points", format!("must be at least 2, got {}", g.box_points)));
        }
        Ok(GridSpec {
            omega_points: g.omega_points,
            theta_points: g.theta_points,
            box_points: g.box_points,
        })
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.simulation
            .seed
            .ok_or_else(|| invalid("simulation.seed", "a seed is required; pass --seed or set simulation.seed"))
    }

    pub fn detectors(&self) -> Result<(DetectorModel, DetectorModel), CliError> {
        let s = &self.simulation;
        let one = DetectorModel {
            efficiency: fraction("simulation.efficiency_1", s.efficiency_1)?,
            dark_rate: non_negative("simulation.dark_rate_1_hz", s.dark_rate_1_hz)?,
            jitter_sigma: non_negative("simulation.jitter_1_s", s.jitter_1_s)?,
        };
        let two = DetectorModel {
            efficiency: fraction("simulation.efficiency_2", s.efficiency_2)?,
            dark_rate: non_negative("simulation.dark_rate_2_hz", s.dark_rate_2_hz)?,
            jitter_sigma: non_negative("simulation.jitter_2_s", s.jitter_2_s)?,
        };
        Ok((one, two))
    }

    pub fn source(&self) -> Result<SourceModel, CliError> {
        let s = &self.simulation;
        Ok(SourceModel {
            pair_rate_per_mw: non_negative("simulation.pair_rate_per_mw", s.pair_rate_per_mw)?,
            uncorrelated_background_1: non_negative("simulation.background_1_hz", s.background_1_hz)?,
            uncorrelated_background_2: non_negative("simulation.background_2_hz", s.background_2_hz)?,
        })
    }

    pub fn duration(&self) -> Result<f64, CliError> {
        positive("simulation.duration_s", self.simulation.duration_s)
    }

    pub fn histogram(&self) -> Result<HistogramSettings, CliError> {
        let s = &self.simulation;
        let bin_width = positive("simulation.bin_width_s", s.bin_width_s)?;
        let tau_half_range = positive("simulation.tau_half_range_s", s.tau_half_range_s)?;
        if tau_half_range < 5.0 * bin_width {
            return Err(invalid("simulation.tau_half_range_s", "must span at least five bins"));
        }
        let exclusion_half_width = match s.exclusion_half_width_s {
            Some(v) => Some(non_negative("simulation.exclusion_half_width_s", v)?),
            None => None,
        };
        Ok(HistogramSettings {
            bin_width,
            tau_half_range,
            exclusion_half_width,
        })
    }

    pub fn sweep_powers(&self) -> Result<Vec<f64>, CliError> {
        let p = &self.simulation.sweep_powers_mw;
        if p.is_empty() {
            return Err(invalid("simulation.sweep_powers_mw", "must not be empty"));
        }
        for (k, &v) in p.iter().enumerate() {
            non_negative(&format!("simulation.sweep_powers_mw[{k}]"), v)?;
        }
        Ok(p.clone())
    }

    pub fn mle_options(&self) -> Result<MleOptions, CliError> {
        let t = &self.tomography;
        if t.max_iterations == 0 {
            return Err(invalid("tomography.max_iterations", "must be at least 1"));
        }
        Ok(MleOptions {
            max_iterations: t.max_iterations,
            tolerance: positive("tomography.tolerance", t.tolerance)?,
            handedness: t.handedness,
            ..MleOptions::default()
        })
    }

    pub fn werner_p(&self) -> Result<f64, CliError> {
        fraction("tomography.werner_p", self.tomography.werner_p)
    }

    pub fn counts_per_setting(&self) -> Result<f64, CliError> {
        positive("tomography.counts_per_setting", self.tomography.counts_per_setting)
    }
}
