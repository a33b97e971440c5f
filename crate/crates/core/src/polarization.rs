//! D3h second-order susceptibility, pump-angle dependent two-photon
//! polarization states and the SHG polar pattern.
//!
//! Axis convention: `x` is the zigzag direction and maps to `|H⟩`, `y` is
//! the armchair direction and maps to `|V⟩`. Pump angles are measured from
//! the armchair axis, so a pump at angle `θ` has field `(sin θ, cos θ)` in
//! `(x, y)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fixed lab/crystal frame assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisConvention;

impl AxisConvention {
    pub const H_AXIS: &'static str = "zigzag (x)";
    pub const V_AXIS: &'static str = "armchair (y)";
    pub const ANGLE_ORIGIN: &'static str = "armchair";
}

/// χ(2) tensor of a D3h crystal: `χ_yyy = d`, `χ_yxx = χ_xxy = χ_xyx = −d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiTensor {
    pub d: f64,
}

impl ChiTensor {
    pub fn new(d: f64) -> Self {
        Self { d }
    }

    /// Component `χ_ijk` with indices 0 = x, 1 = y.
    pub fn component(&self, i: usize, j: usize, k: usize) -> f64 {
        match (i, j, k) {
            (1, 1, 1) => self.d,
            (1, 0, 0) | (0, 0, 1) | (0, 1, 0) => -self.d,
            _ => 0.0,
        }
    }

    /// Second-order polarization `P_i = Σ χ_ijk E_j E_k`.
    pub fn polarization(&self, field: [f64; 2]) -> [f64; 2] {
        let mut p = [0.0; 2];
        for (i, pi) in p.iter_mut().enumerate() {
            for j in 0..2 {
                for k in 0..2 {
                    *pi += self.component(i, j, k) * field[j] * field[k];
                }
            }
        }
        p
    }

    /// Down-conversion amplitude `A_jk = Σ_i e_i χ_ijk` for pump field `e`.
    pub fn pair_amplitudes(&self, pump_field: [f64; 2]) -> [[f64; 2]; 2] {
        let mut a = [[0.0; 2]; 2];
        for (j, row) in a.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = (0..2).map(|i| pump_field[i] * self.component(i, j, k)).sum();
            }
        }
        a
    }
}

/// Pump field in `(x, y)` for a polarization angle from armchair.
pub fn pump_field(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [s, c]
}

/// Two-photon polarization state with amplitudes ordered `HH, HV, VH, VV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    amplitudes: Vector4<Complex64>,
}

impl TwoPhotonState {
    /// Normalizes the amplitudes and fixes the global phase so that the
    /// first non-negligible amplitude is real and positive.
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let v = Vector4::from(amplitudes);
        let norm = v.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::InvalidInput("state amplitudes must not all vanish".into()));
        }
        let mut v = v / Complex64::from(norm);
        if let Some(lead) = v.iter().find(|a| a.norm() > 1e-12).copied() {
            let phase = lead / lead.norm();
            v /= phase;
        }
        Ok(Self { amplitudes: v })
    }

    pub fn from_real(amplitudes: [f64; 4]) -> Result<Self> {
        Self::new(amplitudes.map(Complex64::from))
    }

    pub fn amplitudes(&self) -> &Vector4<Complex64> {
        &self.amplitudes
    }

    pub fn to_array(&self) -> [Complex64; 4] {
        [self.amplitudes[0], self.amplitudes[1], self.amplitudes[2], self.amplitudes[3]]
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &TwoPhotonState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    /// Apply independent single-photon 2×2 unitaries `u1 ⊗ u2`.
    pub fn apply_local(&self, u1: &nalgebra::Matrix2<Complex64>, u2: &nalgebra::Matrix2<Complex64>) -> Result<Self> {
        let u = u1.kronecker(u2);
        let v = u * self.amplitudes;
        Self::new([v[0], v[1], v[2], v[3]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [BellState::PhiPlus, BellState::PhiMinus, BellState::PsiPlus, BellState::PsiMinus];

    pub fn state(self) -> TwoPhotonState {
        let r = FRAC_1_SQRT_2;
        let a = match self {
            BellState::PhiPlus => [r, 0.0, 0.0, r],
            BellState::PhiMinus => [r, 0.0, 0.0, -r],
            BellState::PsiPlus => [0.0, r, r, 0.0],
            BellState::PsiMinus => [0.0, r, -r, 0.0],
        };
        TwoPhotonState {
            amplitudes: Vector4::from(a.map(Complex64::from)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.to_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
        match key.as_str() {
            "phi+" | "φ+" | "phiplus" => Ok(BellState::PhiPlus),
            "phi-" | "φ-" | "φ−" | "phiminus" => Ok(BellState::PhiMinus),
            "psi+" | "ψ+" | "psiplus" => Ok(BellState::PsiPlus),
            "psi-" | "ψ-" | "ψ−" | "psiminus" => Ok(BellState::PsiMinus),
            _ => Err(Error::InvalidInput(format!(
                "unknown Bell state '{s}'; valid names are phi+, phi-, psi+, psi-"
            ))),
        }
    }
}

pub fn bell_state(name: &str) -> Result<TwoPhotonState> {
    Ok(name.parse::<BellState>()?.state())
}

/// Polarization state of a pair generated by a pump at `theta` (radians
/// from armchair), from contracting the pump field with the χ(2) tensor.
pub fn pair_state_from_pump(theta: f64) -> TwoPhotonState {
    pair_state_from_pump_in_frame(theta, 0.0)
}

/// As [`pair_state_from_pump`], expressed in a lab frame whose H axis is
/// rotated by `frame_rotation` from zigzag.
pub fn pair_state_from_pump_in_frame(theta: f64, frame_rotation: f64) -> TwoPhotonState {
    let a = ChiTensor::new(1.0).pair_amplitudes(pump_field(theta));
    // x ↔ H, y ↔ V
    let amps = [a[0][0], a[0][1], a[1][0], a[1][1]].map(Complex64::from);
    let state = TwoPhotonState::new(amps).expect("pump contraction never vanishes");
    if frame_rotation == 0.0 {
        return state;
    }
    let r = rotation(-frame_rotation);
    state.apply_local(&r, &r).expect("rotation preserves norm")
}

/// Real 2D rotation acting on single-photon `(H, V)` amplitudes.
pub fn rotation(angle: f64) -> nalgebra::Matrix2<Complex64> {
    let (s, c) = angle.sin_cos();
    nalgebra::Matrix2::new(c, -s, s, c).map(Complex64::from)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analyzer {
    Parallel,
    Perpendicular,
}

impl FromStr for Analyzer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "parallel" | "par" => Ok(Analyzer::Parallel),
            "perpendicular" | "perp" => Ok(Analyzer::Perpendicular),
            _ => Err(Error::InvalidInput(format!(
                "unknown analyzer '{s}'; use parallel or perpendicular"
            ))),
        }
    }
}

/// SHG intensity for a pump at `theta` seen through an analyzer parallel
/// or perpendicular to the pump.
pub fn shg_intensity(tensor: &ChiTensor, theta: f64, analyzer: Analyzer) -> f64 {
    let e = pump_field(theta);
    let p = tensor.polarization(e);
    let axis = match analyzer {
        Analyzer::Parallel => e,
        Analyzer::Perpendicular => [e[1], -e[0]],
    };
    let proj = p[0] * axis[0] + p[1] * axis[1];
    proj * proj
}

/// 4×4 density matrix over `HH, HV, VH, VV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(Matrix4<Complex64>);

/// Tolerance used for the Hermiticity, trace and positivity checks.
pub const PHYSICAL_TOLERANCE: f64 = 1e-10;

impl DensityMatrix4 {
    /// Wrap a matrix after checking it is Hermitian, unit trace and PSD.
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let rho = Self(m);
        rho.check()?;
        Ok(rho)
    }

    /// Wrap without validation; for intermediate results such as linear
    /// inversion that may be unphysical.
    pub fn new_unchecked(m: Matrix4<Complex64>) -> Self {
        Self(m)
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() * Complex64::from(0.25))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let h = (self.0 + self.0.adjoint()) * Complex64::from(0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        [ev[0], ev[1], ev[2], ev[3]]
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).camax()
    }

    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > PHYSICAL_TOLERANCE {
            return Err(Error::Unphysical(format!("matrix not Hermitian (max deviation {herm:.3e})")));
        }
        let tr = self.0.trace();
        if (tr.re - 1.0).abs() > PHYSICAL_TOLERANCE || tr.im.abs() > PHYSICAL_TOLERANCE {
            return Err(Error::Unphysical(format!("trace {tr} differs from 1")));
        }
        let min = self.eigenvalues()[0];
        if min < -PHYSICAL_TOLERANCE {
            return Err(Error::Unphysical(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, state: &TwoPhotonState) -> f64 {
        let v = state.amplitudes();
        (v.adjoint() * self.0 * v)[(0, 0)].re
    }

    /// `p ρ + (1 − p) I/4`.
    pub fn mix_with_white_noise(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("mixing weight must lie in [0, 1], got {p}")));
        }
        Ok(Self(
            self.0 * Complex64::from(p) + Matrix4::identity() * Complex64::from((1.0 - p) / 4.0),
        ))
    }

    /// `(u1 ⊗ u2) ρ (u1 ⊗ u2)†`.
    pub fn apply_local(&self, u1: &nalgebra::Matrix2<Complex64>, u2: &nalgebra::Matrix2<Complex64>) -> Self {
        let u = u1.kronecker(u2);
        Self(u * self.0 * u.adjoint())
    }
}

pub fn state_to_density_matrix(state: &TwoPhotonState) -> Result<DensityMatrix4> {
    let n = state.norm_squared();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("state is not normalized (|ψ|² = {n})")));
    }
    let v = state.amplitudes();
    Ok(DensityMatrix4(v * v.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    fn close(a: [Complex64; 4], b: [f64; 4]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - Complex64::from(y)).norm() < 1e-12)
    }

    #[test]
    fn tensor_has_four_signed_components() {
        let chi = ChiTensor::new(2.0);
        let mut nonzero = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let c = chi.component(i, j, k);
                    if c != 0.0 {
                        nonzero.push(((i, j, k), c));
                    }
                }
            }
        }
        assert_eq!(nonzero.len(), 4);
        assert_eq!(chi.component(1, 1, 1), 2.0);
        assert_eq!(chi.component(1, 0, 0), -2.0);
        assert_eq!(chi.component(0, 0, 1), -2.0);
        assert_eq!(chi.component(0, 1, 0), -2.0);
    }

    #[test]
    fn armchair_pump_gives_phi_minus() {
        let r = FRAC_1_SQRT_2;
        assert!(close(pair_state_from_pump(0.0).to_array(), [r, 0.0, 0.0, -r]));
    }

    #[test]
    fn zigzag_pump_gives_psi_plus() {
        let r = FRAC_1_SQRT_2;
        assert!(close(pair_state_from_pump(FRAC_PI_2).to_array(), [0.0, r, r, 0.0]));
    }

    #[test]
    fn diagonal_pump_equal_weights() {
        // (VV − HH − HV − VH)/2 with the leading amplitude made positive
        assert!(close(pair_state_from_pump(FRAC_PI_4).to_array(), [0.5, 0.5, 0.5, -0.5]));
    }

    #[test]
    fn bell_lookup() {
        let r = FRAC_1_SQRT_2;
        assert!(close(bell_state("phi-").unwrap().to_array(), [r, 0.0, 0.0, -r]));
        assert!(close(bell_state("Ψ+").unwrap().to_array(), [0.0, r, r, 0.0]));
        let err = bell_state("Xi").unwrap_err().to_string();
        assert!(err.contains("phi+") && err.contains("psi-"), "{err}");
    }

    #[test]
    fn shg_examples() {
        let chi = ChiTensor::new(1.5);
        assert!((shg_intensity(&chi, 0.0, Analyzer::Parallel) - 2.25).abs() < 1e-12);
        assert!(shg_intensity(&chi, FRAC_PI_6, Analyzer::Parallel).abs() < 1e-12);
        for j in 0..100 {
            let t = j as f64 * 0.0731;
            let sum = shg_intensity(&chi, t, Analyzer::Parallel) + shg_intensity(&chi, t, Analyzer::Perpendicular);
            assert!((sum - 2.25).abs() < 1e-12);
            assert!((shg_intensity(&chi, t, Analyzer::Parallel) - 2.25 * (3.0 * t).cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn density_matrix_of_phi_minus() {
        let rho = state_to_density_matrix(&BellState::PhiMinus.state()).unwrap();
        let m = rho.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expect = match (i, j) {
                    (0, 0) | (3, 3) => 0.5,
                    (0, 3) | (3, 0) => -0.5,
                    _ => 0.0,
                };
                assert!((m[(i, j)] - Complex64::from(expect)).norm() < 1e-15);
            }
        }
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_state_rejected() {
        let s = TwoPhotonState {
            amplitudes: Vector4::from([Complex64::from(1.0); 4]),
        };
        assert!(state_to_density_matrix(&s).is_err());
    }

    #[test]
    fn frame_rotation_by_quarter_turn_swaps_axes() {
        // Rotating the lab frame by π/2 relabels H ↔ V (with a sign).
        let s = pair_state_from_pump_in_frame(0.0, FRAC_PI_2);
        assert!((s.overlap(&BellState::PhiMinus.state()) - 1.0).abs() < 1e-12);
        let s = pair_state_from_pump_in_frame(FRAC_PI_2, PI / 8.0);
        assert!((s.norm_squared() - 1.0).abs() < 1e-12);
    }
}
