//! Refractive index, wavevectors and thickness bookkeeping for the
//! nonlinear film.
//!
//! The index model is a Sellmeier series in vacuum wavelength (μm):
//!
//! ```text
//! n²(λ) = A + Σ_j B_j λ² / (λ² − C_j)
//! ```
//!
//! stored as the flat coefficient list `[A, B_1, C_1, B_2, C_2, ...]`
//! (dimensionless, μm²). A single coefficient gives a constant index.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

/// Thickness of one GaSe layer (173 nm / 216 layers).
pub const GASE_LAYER_THICKNESS_M: f64 = 0.801e-9;

/// Effective ordinary-ray GaSe index used by default.
///
/// One UV oscillator near 340 nm plus an infrared lattice term. The
/// coefficients are fitted so that the degenerate coherence length is
/// about 3.2 μm for a 775 nm pump and below 200 nm for a 405 nm pump.
pub const GASE_EFFECTIVE_COEFFICIENTS: [f64; 5] = [4.9077, 3.8987, 0.11556, 3.1485, 2194.0];
pub const GASE_EFFECTIVE_RANGE_NM: [f64; 2] = [380.0, 5000.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    #[serde(default = "default_name")]
    pub name: String,
    pub coefficients: Vec<f64>,
    #[serde(rename = "range_nm")]
    pub valid_wavelength_range: [f64; 2],
}

fn default_name() -> String {
    "custom".to_string()
}

impl Default for DispersionModel {
    fn default() -> Self {
        Self::gase()
    }
}

impl DispersionModel {
    /// Build a model and check that the index is real and above one across
    /// the whole validity range.
    pub fn new(name: impl Into<String>, coefficients: Vec<f64>, range_nm: [f64; 2]) -> Result<Self> {
        let model = Self {
            name: name.into(),
            coefficients,
            valid_wavelength_range: range_nm,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn gase() -> Self {
        Self {
            name: "gase-effective".to_string(),
            coefficients: GASE_EFFECTIVE_COEFFICIENTS.to_vec(),
            valid_wavelength_range: GASE_EFFECTIVE_RANGE_NM,
        }
    }

    /// Wavelength-independent index, mostly useful in tests.
    pub fn constant(n: f64, range_nm: [f64; 2]) -> Result<Self> {
        Self::new(format!("constant-{n}"), vec![n * n], range_nm)
    }

    /// Parse a model from TOML text with keys `coefficients` and `range_nm`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let model: DispersionModel = toml::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.valid_wavelength_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "range_nm must satisfy 0 < min < max, got [{lo}, {hi}]"
            )));
        }
        if self.coefficients.is_empty() || self.coefficients.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "coefficients must be [A, B1, C1, ...] with odd length, got {} values",
                self.coefficients.len()
            )));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        for pair in self.coefficients[1..].chunks(2) {
            let c = pair[1];
            if c > 0.0 {
                let pole_nm = c.sqrt() * 1e3;
                if pole_nm >= lo && pole_nm <= hi {
                    return Err(Error::InvalidInput(format!(
                        "Sellmeier pole at {pole_nm:.1} nm lies inside range_nm [{lo}, {hi}]"
                    )));
                }
            }
        }
        // Dense scan in log-wavelength; the series is smooth between poles.
        let steps = 2000;
        for j in 0..=steps {
            let lambda = lo * (hi / lo).powf(j as f64 / steps as f64);
            let n2 = self.index_squared(lambda);
            if !(n2 > 1.0) {
                return Err(Error::InvalidInput(format!(
                    "index is not real and > 1 at {lambda:.1} nm (n² = {n2})"
                )));
            }
        }
        Ok(())
    }

    fn index_squared(&self, lambda_nm: f64) -> f64 {
        let l2 = (lambda_nm * 1e-3).powi(2);
        let a = self.coefficients[0];
        a + self.coefficients[1..]
            .chunks(2)
            .map(|bc| bc[0] * l2 / (l2 - bc[1]))
            .sum::<f64>()
    }

    pub fn contains(&self, lambda_nm: f64) -> bool {
        let [lo, hi] = self.valid_wavelength_range;
        lambda_nm >= lo && lambda_nm <= hi
    }

    /// Refractive index at a vacuum wavelength in nm.
    pub fn refractive_index(&self, lambda_nm: f64) -> Result<f64> {
        if !self.contains(lambda_nm) {
            let [lo, hi] = self.valid_wavelength_range;
            return Err(Error::domain(format!(
                "wavelength {lambda_nm} nm outside the valid range [{lo}, {hi}] nm of dispersion model '{}'",
                self.name
            )));
        }
        Ok(self.index_squared(lambda_nm).sqrt())
    }

    /// Wavevector magnitude `k = ω n(λ) / c` in rad/m for an angular frequency in rad/s.
    pub fn wavevector_magnitude(&self, omega: f64) -> Result<f64> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::domain(format!(
                "angular frequency must be positive and finite, got {omega}"
            )));
        }
        let n = self.refractive_index(crate::nm_from_omega(omega))?;
        Ok(omega * n / SPEED_OF_LIGHT)
    }
}

/// Thickness of a film with `layer_count` layers, in metres.
pub fn layers_to_thickness(layer_count: u32) -> Result<f64> {
    if layer_count == 0 {
        return Err(Error::domain("layer count must be at least 1"));
    }
    Ok(layer_count as f64 * GASE_LAYER_THICKNESS_M)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearFilm {
    pub layer_count: u32,
    pub chi2_magnitude: f64,
    pub dispersion: DispersionModel,
}

impl NonlinearFilm {
    pub fn new(layer_count: u32, chi2_magnitude: f64, dispersion: DispersionModel) -> Result<Self> {
        layers_to_thickness(layer_count)?;
        if !(chi2_magnitude > 0.0 && chi2_magnitude.is_finite()) {
            return Err(Error::domain(format!(
                "chi2 magnitude must be positive, got {chi2_magnitude}"
            )));
        }
        Ok(Self {
            layer_count,
            chi2_magnitude,
            dispersion,
        })
    }

    /// GaSe film with unit χ(2) and the default dispersion.
    pub fn gase(layer_count: u32) -> Result<Self> {
        Self::new(layer_count, 1.0, DispersionModel::gase())
    }

    /// Film thickness in metres.
    pub fn thickness(&self) -> f64 {
        self.layer_count as f64 * GASE_LAYER_THICKNESS_M
    }
}

/// Degenerate collinear coherence length `π / |k_p − 2 k_s|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceLength {
    /// Metres; `f64::INFINITY` when the process is phase matched.
    pub meters: f64,
    pub phase_matched: bool,
}

pub fn coherence_length(film: &NonlinearFilm, lambda_pump_nm: f64) -> Result<CoherenceLength> {
    let model = &film.dispersion;
    let omega_p = crate::omega_from_nm(lambda_pump_nm);
    let k_p = model.wavevector_magnitude(omega_p)?;
    let k_s = model.wavevector_magnitude(0.5 * omega_p)?;
    let dk = (k_p - 2.0 * k_s).abs();
    // Relative threshold: a constant-index model gives dk at rounding level.
    if dk <= 1e-12 * k_p {
        return Ok(CoherenceLength {
            meters: f64::INFINITY,
            phase_matched: true,
        });
    }
    Ok(CoherenceLength {
        meters: std::f64::consts::PI / dk,
        phase_matched: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn telecom_index_and_dispersion_step() {
        let m = DispersionModel::gase();
        let n1550 = m.refractive_index(1550.0).unwrap();
        let n775 = m.refractive_index(775.0).unwrap();
        assert!(n1550 > 2.0 && n1550 < 3.5);
        let dn = n775 - n1550;
        assert!((dn - 0.111).abs() <= 0.2 * 0.111, "Δn = {dn}");
    }

    #[test]
    fn out_of_range_wavelength_names_range() {
        let err = DispersionModel::gase().refractive_index(10.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("380") && msg.contains("5000"), "{msg}");
    }

    #[test]
    fn index_bounds_and_normal_dispersion_in_window() {
        let m = DispersionModel::gase();
        let mut prev = f64::INFINITY;
        for j in 0..=1000 {
            let l = 700.0 + j as f64;
            let n = m.refractive_index(l).unwrap();
            assert!(n > 2.0 && n < 3.5, "n({l}) = {n}");
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn wavevector_examples() {
        let m = DispersionModel::constant(2.81, [300.0, 3000.0]).unwrap();
        let w = crate::omega_from_nm(1550.0);
        let k = m.wavevector_magnitude(w).unwrap();
        assert!((k - 1.139e7).abs() / 1.139e7 < 1e-3, "k = {k}");
        let k2 = m.wavevector_magnitude(2.0 * w).unwrap();
        assert!((k2 / k - 2.0).abs() < 1e-12);
        assert!(m.wavevector_magnitude(0.0).is_err());
    }

    #[test]
    fn coherence_length_anchors() {
        let film = NonlinearFilm::gase(1).unwrap();
        let l775 = coherence_length(&film, 775.0).unwrap();
        assert!((l775.meters - 3.5e-6).abs() <= 0.2 * 3.5e-6, "{:?}", l775);
        let l405 = coherence_length(&film, 405.0).unwrap();
        assert!(l405.meters < 200e-9, "{:?}", l405);
    }

    #[test]
    fn coherence_length_matches_index_form() {
        let film = NonlinearFilm::gase(10).unwrap();
        let m = &film.dispersion;
        let lp = 775.0;
        let dn = m.refractive_index(lp).unwrap() - m.refractive_index(2.0 * lp).unwrap();
        let expect = lp * 1e-9 / (2.0 * dn);
        let got = coherence_length(&film, lp).unwrap().meters;
        assert!((got - expect).abs() / expect < 1e-9);
        let _ = PI;
    }

    #[test]
    fn flat_index_is_phase_matched() {
        let m = DispersionModel::constant(2.8, [300.0, 3000.0]).unwrap();
        let film = NonlinearFilm::new(5, 1.0, m).unwrap();
        let l = coherence_length(&film, 775.0).unwrap();
        assert!(l.phase_matched && l.meters.is_infinite());
    }

    #[test]
    fn coherence_length_ignores_chi2() {
        let a = NonlinearFilm::new(3, 1.0, DispersionModel::gase()).unwrap();
        let b = NonlinearFilm::new(3, 17.0, DispersionModel::gase()).unwrap();
        assert_eq!(
            coherence_length(&a, 775.0).unwrap(),
            coherence_length(&b, 775.0).unwrap()
        );
    }

    #[test]
    fn layer_thickness_examples() {
        assert!((layers_to_thickness(216).unwrap() - 173e-9).abs() < 0.5e-9);
        assert!((layers_to_thickness(1).unwrap() - 0.801e-9).abs() < 1e-15);
        assert!((layers_to_thickness(90).unwrap() - 72.09e-9).abs() < 0.01e-9);
        assert!(layers_to_thickness(0).is_err());
    }

    #[test]
    fn toml_roundtrip_and_rejections() {
        let m = DispersionModel::from_toml_str(
            "coefficients = [4.9077, 3.8987, 0.11556, 3.1485, 2194.0]\nrange_nm = [380.0, 5000.0]\n",
        )
        .unwrap();
        assert_eq!(m.coefficients, DispersionModel::gase().coefficients);
        // pole at ~340 nm inside the requested range
        assert!(DispersionModel::from_toml_str(
            "coefficients = [4.9077, 3.8987, 0.11556]\nrange_nm = [300.0, 1000.0]\n"
        )
        .is_err());
        assert!(DispersionModel::from_toml_str("coefficients = [0.5]\nrange_nm = [300.0, 1000.0]\n").is_err());
        assert!(DispersionModel::from_toml_str("coefficients = [4.0, 1.0]\nrange_nm = [300.0, 1000.0]\n").is_err());
    }

    #[test]
    fn shipped_default_validates() {
        DispersionModel::gase().validate().unwrap();
    }
}
