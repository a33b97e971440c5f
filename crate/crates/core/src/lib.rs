//! Simulation and analysis toolkit for spontaneous parametric down-conversion
//! (SPDC) in deeply subwavelength nonlinear films.
//!
//! The crate is organised by subsystem:
//!
//! * [`dispersion`] refractive index, wavevectors, film thickness and coherence length.
//! * [`spdc`] the pair-emission rate model, spectra, angular profiles and the
//!   co-/counter-propagating scenario rates.
//! * [`polarization`] the D3h second-order tensor, pump-angle dependent
//!   two-photon states and the SHG polar pattern.
//! * [`photon_stats`] Monte Carlo time tags, coincidence histograms and g2.
//! * [`tomography`] two-qubit polarization state tomography (linear and
//!   maximum-likelihood reconstruction, fidelity, concurrence).
//! * [`io`] CSV/JSON exchange formats used by the command-line tool.

pub mod dispersion;
pub mod error;
pub mod io;
pub mod numeric;
pub mod photon_stats;
pub mod polarization;
pub mod spdc;
pub mod tomography;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular frequency (rad/s) of light with the given vacuum wavelength in nm.
pub fn omega_from_nm(lambda_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (lambda_nm * 1e-9)
}

/// Vacuum wavelength in nm for an angular frequency in rad/s.
pub fn nm_from_omega(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega * 1e9
}
