//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function returns a flat `Float64Array`; the layouts are
//! documented per function. The computations live in plain functions so
//! they can be tested natively.

use std::f64::consts::PI;

use wasm_bindgen::prelude::*;

use spdc_core::dispersion::NonlinearFilm;
use spdc_core::polarization::{pair_state_from_pump, shg_intensity, state_to_density_matrix, Analyzer, BellState, ChiTensor};
use spdc_core::spdc::{angular_emission_profile, GridSpec, PumpBeam};
use spdc_core::tomography::concurrence;

/// Telecom band collected by the demo, nm.
pub const BAND_NM: [f64; 2] = [1460.0, 1650.0];

/// `[theta_0.., signal_0.., idler_0..]`, each of length `theta_points`.
pub fn profile_values(layers: u32, theta_points: usize, omega_points: usize) -> Result<Vec<f64>, String> {
    let film = NonlinearFilm::gase(layers).map_err(|e| e.to_string())?;
    let grid = GridSpec {
        omega_points,
        theta_points,
        ..GridSpec::default()
    };
    let p = angular_emission_profile(&film, &PumpBeam::reference(), BAND_NM, &grid).map_err(|e| e.to_string())?;
    let mut out = p.theta_axis;
    out.extend(p.signal);
    out.extend(p.idler);
    Ok(out)
}

/// `[a_HH, a_HV, a_VH, a_VV, F_phi+, F_phi-, F_psi+, F_psi-, concurrence]`.
/// The pair state from the tensor is real, so only real parts are returned.
pub fn state_values(theta: f64) -> Result<Vec<f64>, String> {
    if !theta.is_finite() {
        return Err("pump angle must be finite".into());
    }
    let psi = pair_state_from_pump(theta);
    let mut out: Vec<f64> = psi.to_array().iter().map(|a| a.re).collect();
    out.extend(BellState::ALL.iter().map(|b| psi.overlap(&b.state())));
    let rho = state_to_density_matrix(&psi).map_err(|e| e.to_string())?;
    out.push(concurrence(&rho).map_err(|e| e.to_string())?);
    Ok(out)
}

/// `[theta_0.., parallel_0.., perpendicular_0..]` over one turn.
pub fn shg_values(points: usize) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least two angles".into());
    }
    let tensor = ChiTensor::new(1.0);
    let thetas: Vec<f64> = (0..points).map(|k| 2.0 * PI * k as f64 / points as f64).collect();
    let mut out = thetas.clone();
    out.extend(thetas.iter().map(|&t| shg_intensity(&tensor, t, Analyzer::Parallel)));
    out.extend(thetas.iter().map(|&t| shg_intensity(&tensor, t, Analyzer::Perpendicular)));
    Ok(out)
}

#[wasm_bindgen]
pub fn angular_profile(layers: u32, theta_points: usize, omega_points: usize) -> Result<Vec<f64>, JsError> {
    profile_values(layers, theta_points, omega_points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pair_state(theta: f64) -> Result<Vec<f64>, JsError> {
    state_values(theta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn shg_pattern(points: usize) -> Result<Vec<f64>, JsError> {
    shg_values(points).map_err(|e| JsError::new(&e))
}
