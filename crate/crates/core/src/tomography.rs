//! Two-qubit polarization state tomography.
//!
//! Settings are pairs of single-photon projections onto `H, V, D, A, R, L`.
//! Reconstruction is either a direct linear inversion (which may return an
//! unphysical matrix) or a Poisson maximum-likelihood fit over
//! `ρ = T†T / tr(T†T)` with `T` lower triangular.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::polarization::{pair_state_from_pump, state_to_density_matrix, DensityMatrix4, TwoPhotonState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    H,
    V,
    D,
    A,
    R,
    L,
}

/// Sign convention for the circular states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    /// `R = (H + iV)/√2`, `L = (H − iV)/√2`.
    #[default]
    Standard,
    /// `R` and `L` exchanged.
    Flipped,
}

impl BasisLabel {
    pub const ALL: [BasisLabel; 6] = [BasisLabel::H, BasisLabel::V, BasisLabel::D, BasisLabel::A, BasisLabel::R, BasisLabel::L];

    pub fn vector(self, handedness: Handedness) -> Vector2<Complex64> {
        let r = FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let circ = match handedness {
            Handedness::Standard => 1.0,
            Handedness::Flipped => -1.0,
        };
        match self {
            BasisLabel::H => Vector2::new(c(1.0, 0.0), c(0.0, 0.0)),
            BasisLabel::V => Vector2::new(c(0.0, 0.0), c(1.0, 0.0)),
            BasisLabel::D => Vector2::new(c(r, 0.0), c(r, 0.0)),
            BasisLabel::A => Vector2::new(c(r, 0.0), c(-r, 0.0)),
            BasisLabel::R => Vector2::new(c(r, 0.0), c(0.0, circ * r)),
            BasisLabel::L => Vector2::new(c(r, 0.0), c(0.0, -circ * r)),
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(BasisLabel::H),
            "V" | "v" => Ok(BasisLabel::V),
            "D" | "d" => Ok(BasisLabel::D),
            "A" | "a" => Ok(BasisLabel::A),
            "R" | "r" => Ok(BasisLabel::R),
            "L" | "l" => Ok(BasisLabel::L),
            other => Err(Error::InvalidInput(format!(
                "unknown polarization basis '{other}'; expected one of H, V, D, A, R, L"
            ))),
        }
    }
}

pub type Setting = (BasisLabel, BasisLabel);

/// `|a⟩⟨a| ⊗ |b⟩⟨b|` in the `HH, HV, VH, VV` ordering.
pub fn projector(setting: Setting) -> Matrix4<Complex64> {
    projector_with(setting, Handedness::Standard)
}

pub fn projector_with(setting: Setting, handedness: Handedness) -> Matrix4<Complex64> {
    let v = setting.0.vector(handedness).kronecker(&setting.1.vector(handedness));
    v * v.adjoint()
}

/// The sixteen-setting scheme of James, Kwiat, Munro and White.
pub fn standard_16_settings() -> Vec<Setting> {
    use BasisLabel::*;
    vec![
        (H, H), (H, V), (V, V), (V, H),
        (R, H), (R, V), (D, V), (D, H),
        (D, R), (D, D), (R, D), (H, D),
        (V, D), (V, L), (H, L), (R, L),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub setting: Setting,
    pub counts: u64,
    /// Seconds.
    pub acquisition_time: f64,
}

/// `tr(P ρ)` clipped at zero.
fn probability(p: &Matrix4<Complex64>, rho: &Matrix4<Complex64>) -> f64 {
    (p * rho).trace().re.max(0.0)
}

/// Poisson counts with means `mean_total · tr(P_k ρ)`, one second each.
pub fn simulate_counts(rho: &DensityMatrix4, settings: &[Setting], mean_total: f64, seed: u64) -> Result<Vec<MeasurementRecord>> {
    simulate_counts_with(rho, settings, mean_total, seed, Handedness::Standard)
}

pub fn simulate_counts_with(
    rho: &DensityMatrix4,
    settings: &[Setting],
    mean_total: f64,
    seed: u64,
    handedness: Handedness,
) -> Result<Vec<MeasurementRecord>> {
    rho.check()?;
    if !(mean_total > 0.0 && mean_total.is_finite()) {
        return Err(Error::domain(format!("mean_total must be positive, got {mean_total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    settings
        .iter()
        .map(|&setting| {
            let lambda = mean_total * probability(&projector_with(setting, handedness), rho.matrix());
            let counts = if lambda > 0.0 {
                Poisson::new(lambda)
                    .map_err(|e| Error::Numerical(format!("Poisson mean {lambda}: {e}")))?
                    .sample(&mut rng) as u64
            } else {
                0
            };
            Ok(MeasurementRecord {
                setting,
                counts,
                acquisition_time: 1.0,
            })
        })
        .collect()
}

/// `mean_total` that makes the expected counts, averaged over `settings`,
/// equal `per_setting`.
pub fn mean_total_for_counts_per_setting(rho: &DensityMatrix4, settings: &[Setting], per_setting: f64) -> Result<f64> {
    rho.check()?;
    if settings.is_empty() {
        return Err(Error::InvalidInput("no measurement settings".into()));
    }
    let avg = settings.iter().map(|&s| probability(&projector(s), rho.matrix())).sum::<f64>() / settings.len() as f64;
    if !(avg > 0.0) {
        return Err(Error::domain("state has no weight on any of the settings"));
    }
    Ok(per_setting / avg)
}

/// Flat accidental-coincidence subtraction, `n_k − rate · t_k`, floored at 0.
pub fn subtract_accidentals(records: &[MeasurementRecord], accidental_rate: f64) -> Vec<MeasurementRecord> {
    records
        .iter()
        .map(|r| {
            let n = (r.counts as f64 - accidental_rate * r.acquisition_time).round().max(0.0) as u64;
            MeasurementRecord { counts: n, ..*r }
        })
        .collect()
}

fn pauli(a: usize) -> Matrix2<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match a {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -i, i, z),
        _ => Matrix2::new(o, z, z, -o),
    }
}

/// Orthonormal Hermitian basis `σ_a ⊗ σ_b / 2`.
fn hermitian_basis() -> Vec<Matrix4<Complex64>> {
    let mut basis = Vec::with_capacity(16);
    for a in 0..4 {
        for b in 0..4 {
            basis.push(pauli(a).kronecker(&pauli(b)) * Complex64::from(0.5));
        }
    }
    basis
}

fn validate_records(records: &[MeasurementRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no measurement records".into()));
    }
    for r in records {
        if !(r.acquisition_time > 0.0 && r.acquisition_time.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "acquisition time for setting {}{} must be positive, got {}",
                r.setting.0, r.setting.1, r.acquisition_time
            )));
        }
    }
    Ok(())
}

/// Real design matrix `D_kj = tr(P_k Γ_j)`.
fn design_matrix(settings: &[Setting], handedness: Handedness) -> DMatrix<f64> {
    let basis = hermitian_basis();
    DMatrix::from_fn(settings.len(), 16, |k, j| (projector_with(settings[k], handedness) * basis[j]).trace().re)
}

/// Rank of the span of the settings' projectors as real 16-vectors.
pub fn projector_span_rank(settings: &[Setting]) -> usize {
    if settings.is_empty() {
        return 0;
    }
    design_matrix(settings, Handedness::Standard).rank(1e-10)
}

/// Solve `tr(P_k ρ) = n_k / N` for Hermitian `ρ` (least squares when there
/// are more than 16 settings), with `N` fixed by unit trace.
pub fn linear_reconstruct(records: &[MeasurementRecord]) -> Result<DensityMatrix4> {
    linear_reconstruct_with(records, Handedness::Standard)
}

pub fn linear_reconstruct_with(records: &[MeasurementRecord], handedness: Handedness) -> Result<DensityMatrix4> {
    validate_records(records)?;
    let settings: Vec<Setting> = records.iter().map(|r| r.setting).collect();
    let d = design_matrix(&settings, handedness);
    let rates = DVector::from_iterator(records.len(), records.iter().map(|r| r.counts as f64 / r.acquisition_time));
    let svd = d.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if records.len() < 16 || smin <= 1e-10 * smax {
        return Err(Error::Numerical(format!(
            "measurement settings are not informationally complete (design matrix singular, σ_min/σ_max = {:.3e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    let m = svd
        .solve(&rates, 1e-12 * smax)
        .map_err(|e| Error::Numerical(format!("linear inversion failed: {e}")))?;
    let basis = hermitian_basis();
    let mut rho = Matrix4::zeros();
    for (coef, g) in m.iter().zip(&basis) {
        rho += g * Complex64::from(*coef);
    }
    let tr = rho.trace().re;
    if !(tr.abs() > 0.0) {
        return Err(Error::Numerical("linear inversion produced a traceless matrix (no counts?)".into()));
    }
    let rho = rho / Complex64::from(tr);
    Ok(DensityMatrix4::new_unchecked((rho + rho.adjoint()) * Complex64::from(0.5)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop when the relative log-likelihood improvement over one
    /// iteration drops below this.
    pub tolerance: f64,
    /// Floor on `tr(P_k ρ)` inside the logarithm.
    pub probability_floor: f64,
    pub handedness: Handedness,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-9,
            probability_floor: 1e-12,
            handedness: Handedness::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyResult {
    #[serde(serialize_with = "crate::io::serialize_density")]
    pub rho: DensityMatrix4,
    /// Fidelity to the target state, when one was supplied.
    pub fidelity: Option<f64>,
    pub concurrence: f64,
    pub purity: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood after each accepted step, starting from the initial point.
    #[serde(skip)]
    pub log_likelihood_history: Vec<f64>,
}

impl TomographyResult {
    pub fn with_target(mut self, target: &TwoPhotonState) -> Result<Self> {
        self.fidelity = Some(fidelity(&self.rho, target)?);
        Ok(self)
    }
}

const N_PARAMS: usize = 16;

/// Lower-triangular `T` from 16 reals: 4 real diagonal entries then the
/// six strictly lower entries as (re, im) pairs in row-major order.
fn t_from_params(t: &[f64]) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        m[(i, i)] = Complex64::from(t[i]);
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            m[(i, j)] = Complex64::new(t[k], t[k + 1]);
            k += 2;
        }
    }
    m
}

fn params_from_t(m: &Matrix4<Complex64>) -> Vec<f64> {
    let mut t = vec![0.0; N_PARAMS];
    for i in 0..4 {
        t[i] = m[(i, i)].re;
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            t[k] = m[(i, j)].re;
            t[k + 1] = m[(i, j)].im;
            k += 2;
        }
    }
    t
}

/// Lower-triangular `T` with `T†T = M` for a positive definite `M`.
fn lower_factor(m: &Matrix4<Complex64>) -> Result<Matrix4<Complex64>> {
    // Cholesky of the index-reversed matrix gives the reversed factorization.
    let rev = |a: &Matrix4<Complex64>| Matrix4::from_fn(|i, j| a[(3 - i, 3 - j)]);
    let chol = nalgebra::Cholesky::new(rev(m))
        .ok_or_else(|| Error::Numerical("initial estimate is not positive definite".into()))?;
    let upper = rev(&chol.l());
    Ok(upper.adjoint())
}

struct Likelihood {
    projectors: Vec<Matrix4<Complex64>>,
    counts: Vec<f64>,
    times: Vec<f64>,
    floor: f64,
}

impl Likelihood {
    /// `Σ n ln n − n`, the difference between the saturated-offset value
    /// and `Σ n ln μ − μ`.
    fn saturated_offset(&self) -> f64 {
        self.counts.iter().filter(|&&n| n > 0.0).map(|&n| n * n.ln() - n).sum()
    }

    /// Returns `(L, ∇L)` for unnormalized `M = T†T` with means `t_k tr(P_k M)`.
    ///
    /// `L` is measured from the saturated model, `Σ n ln(μ/n) − (μ − n)`, so
    /// it stays small near the optimum and relative changes are meaningful.
    fn evaluate(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let t = t_from_params(params);
        let m = t.adjoint() * t;
        let scale = m.trace().re.max(f64::MIN_POSITIVE);
        let mut value = 0.0;
        let mut w = Matrix4::<Complex64>::zeros();
        for ((p, &n), &time) in self.projectors.iter().zip(&self.counts).zip(&self.times) {
            let raw = time * (p * m).trace().re;
            let floor = self.floor * time * scale;
            let (mu, active) = if raw > floor { (raw, true) } else { (floor, false) };
            value += if n > 0.0 { n * (mu / n).ln() - raw + n } else { -raw };
            let dl_dmu = if active { n / mu - 1.0 } else { -1.0 };
            w += p * Complex64::from(dl_dmu * time);
        }
        // dμ = 2 Re tr(P T† dT) → gradient from (W T†)_{ba}
        let g = w * t.adjoint();
        let mut grad = vec![0.0; N_PARAMS];
        for i in 0..4 {
            grad[i] = 2.0 * g[(i, i)].re;
        }
        let mut k = 4;
        for i in 1..4 {
            for j in 0..i {
                grad[k] = 2.0 * g[(j, i)].re;
                grad[k + 1] = -2.0 * g[(j, i)].im;
                k += 2;
            }
        }
        (value, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized_rho(params: &[f64]) -> DensityMatrix4 {
    let t = t_from_params(params);
    let m = t.adjoint() * t;
    let m = (m + m.adjoint()) * Complex64::from(0.5);
    DensityMatrix4::new_unchecked(m / Complex64::from(m.trace().re))
}

fn initial_params(records: &[MeasurementRecord], initial: Option<&DensityMatrix4>, handedness: Handedness, projectors: &[Matrix4<Complex64>]) -> Result<Vec<f64>> {
    let start = match initial {
        Some(rho) => *rho.matrix(),
        None => match linear_reconstruct_with(records, handedness) {
            Ok(lin) => {
                // Clip to the physical cone, then keep a little full-rank weight.
                let h = *lin.matrix();
                let eig = h.symmetric_eigen();
                let mut clipped = Matrix4::zeros();
                for (k, &ev) in eig.eigenvalues.iter().enumerate() {
                    let v = eig.eigenvectors.column(k);
                    clipped += v * v.adjoint() * Complex64::from(ev.max(0.0));
                }
                let tr = clipped.trace().re;
                if tr > 0.0 {
                    clipped / Complex64::from(tr)
                } else {
                    *DensityMatrix4::maximally_mixed().matrix()
                }
            }
            Err(e) => return Err(e),
        },
    };
    let start = start * Complex64::from(0.98) + Matrix4::identity() * Complex64::from(0.005);
    let expected: f64 = records
        .iter()
        .zip(projectors)
        .map(|(r, p)| r.acquisition_time * (p * start).trace().re)
        .sum();
    let observed: f64 = records.iter().map(|r| r.counts as f64).sum();
    let scale = observed / expected;
    Ok(params_from_t(&lower_factor(&(start * Complex64::from(scale)))?))
}

/// Poisson maximum-likelihood reconstruction by BFGS ascent on the 16
/// Cholesky-style parameters.
pub fn mle_reconstruct(records: &[MeasurementRecord], initial: Option<&DensityMatrix4>, options: &MleOptions) -> Result<TomographyResult> {
    validate_records(records)?;
    let total: u64 = records.iter().map(|r| r.counts).sum();
    if total == 0 {
        return Err(Error::InvalidInput("total counts must be positive".into()));
    }
    let settings: Vec<Setting> = records.iter().map(|r| r.setting).collect();
    if projector_span_rank(&settings) < 16 {
        return Err(Error::Numerical("measurement settings are not informationally complete".into()));
    }
    let projectors: Vec<_> = settings.iter().map(|&s| projector_with(s, options.handedness)).collect();
    let like = Likelihood {
        projectors: projectors.clone(),
        counts: records.iter().map(|r| r.counts as f64).collect(),
        times: records.iter().map(|r| r.acquisition_time).collect(),
        floor: options.probability_floor,
    };

    let mut x = initial_params(records, initial, options.handedness, &projectors)?;
    let (mut f, mut g) = like.evaluate(&x);
    let mut history = vec![f];
    // Inverse Hessian of −L, starts as a scaled identity.
    let mut h = DMatrix::<f64>::identity(N_PARAMS, N_PARAMS);
    let gnorm = dot(&g, &g).sqrt();
    let xnorm = dot(&x, &x).sqrt();
    if gnorm > 0.0 {
        h *= 0.01 * xnorm.max(1.0) / gnorm;
    }
    let mut converged = false;
    let mut iterations = 0;
    let mut last_improvement = f64::INFINITY;

    while iterations < options.max_iterations {
        iterations += 1;
        // Ascent direction for L is H ∇L (H approximates the inverse Hessian of −L).
        let gv = DVector::from_column_slice(&g);
        let mut dir: Vec<f64> = (&h * &gv).iter().copied().collect();
        if dot(&dir, &g) <= 0.0 {
            h = DMatrix::identity(N_PARAMS, N_PARAMS) * (0.01 * dot(&x, &x).sqrt().max(1.0) / dot(&g, &g).sqrt().max(1e-300));
            dir = (&h * &gv).iter().copied().collect();
        }
        let slope = dot(&dir, &g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (ft, gt) = like.evaluate(&trial);
            if ft.is_finite() && ft >= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            // No ascent possible along the quasi-Newton direction: stationary to rounding.
            converged = true;
            break;
        };
        let improvement = (fn_ - f) / f.abs().max(1.0);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        // y for the minimization of −L
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            let rho_k = 1.0 / sy;
            let sv = DVector::from_column_slice(&s);
            let yv = DVector::from_column_slice(&y);
            if iterations == 1 {
                h = DMatrix::identity(N_PARAMS, N_PARAMS) * (sy / dot(&y, &y));
            }
            let eye = DMatrix::<f64>::identity(N_PARAMS, N_PARAMS);
            let left = &eye - &sv * yv.transpose() * rho_k;
            let right = &eye - &yv * sv.transpose() * rho_k;
            h = &left * &h * &right + &sv * sv.transpose() * rho_k;
        }
        x = xn;
        f = fn_;
        g = gn;
        history.push(f);
        last_improvement = improvement;
        if improvement < options.tolerance {
            converged = true;
            break;
        }
    }

    let rho = normalized_rho(&x);
    let offset = like.saturated_offset();
    let result = TomographyResult {
        concurrence: concurrence_unchecked(&rho),
        purity: rho.purity(),
        rho,
        fidelity: None,
        log_likelihood: f + offset,
        converged,
        iterations,
        log_likelihood_history: history.iter().map(|v| v + offset).collect(),
    };
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            last_improvement,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// `⟨ψ|ρ|ψ⟩` for a pure target.
pub fn fidelity(rho: &DensityMatrix4, target: &TwoPhotonState) -> Result<f64> {
    rho.check()?;
    let n = target.norm_squared();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("target state not normalized (|ψ|² = {n})")));
    }
    Ok(rho.expectation(target).clamp(0.0, 1.0))
}

/// Wootters concurrence.
pub fn concurrence(rho: &DensityMatrix4) -> Result<f64> {
    rho.check()?;
    Ok(concurrence_unchecked(rho))
}

fn hermitian_sqrt(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let h = (m + m.adjoint()) * Complex64::from(0.5);
    let eig = h.symmetric_eigen();
    let mut out = Matrix4::zeros();
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        out += v * v.adjoint() * Complex64::from(ev.max(0.0).sqrt());
    }
    out
}

fn concurrence_unchecked(rho: &DensityMatrix4) -> f64 {
    let m = rho.matrix();
    let yy = pauli(2).kronecker(&pauli(2));
    let tilde = yy * m.conjugate() * yy;
    let s = hermitian_sqrt(m);
    let r = s * tilde * s;
    let r = (r + r.adjoint()) * Complex64::from(0.5);
    let mut lambdas: Vec<f64> = r.symmetric_eigenvalues().iter().map(|&e| e.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0)
}

/// Prepare the pump-angle state, mix with white noise, simulate counts on
/// the standard settings and reconstruct, scoring against the ideal state.
pub fn pump_angle_experiment(theta: f64, werner_p: f64, mean_total: f64, seed: u64, options: &MleOptions) -> Result<TomographyResult> {
    let ideal = pair_state_from_pump(theta);
    let rho = state_to_density_matrix(&ideal)?.mix_with_white_noise(werner_p)?;
    let records = simulate_counts_with(&rho, &standard_16_settings(), mean_total, seed, options.handedness)?;
    mle_reconstruct(&records, None, options)?.with_target(&ideal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::BellState;

    fn phi_minus() -> DensityMatrix4 {
        state_to_density_matrix(&BellState::PhiMinus.state()).unwrap()
    }

    fn noiseless(rho: &DensityMatrix4, n: f64) -> Vec<MeasurementRecord> {
        standard_16_settings()
            .into_iter()
            .map(|s| MeasurementRecord {
                setting: s,
                counts: (n * probability(&projector(s), rho.matrix())).round() as u64,
                acquisition_time: 1.0,
            })
            .collect()
    }

    #[test]
    fn basis_vectors_orthonormal() {
        for h in [Handedness::Standard, Handedness::Flipped] {
            for b in BasisLabel::ALL {
                assert!((b.vector(h).norm() - 1.0).abs() < 1e-15);
            }
            for (a, b) in [(BasisLabel::H, BasisLabel::V), (BasisLabel::D, BasisLabel::A), (BasisLabel::R, BasisLabel::L)] {
                assert!(a.vector(h).dotc(&b.vector(h)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn projector_examples() {
        let p = projector((BasisLabel::H, BasisLabel::H));
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - Complex64::from(e)).norm() < 1e-15);
            }
        }
        let dd = projector((BasisLabel::D, BasisLabel::D));
        assert!(dd.iter().all(|z| (z - Complex64::from(0.25)).norm() < 1e-15));
        let rl = projector((BasisLabel::R, BasisLabel::L));
        let phi_plus = state_to_density_matrix(&BellState::PhiPlus.state()).unwrap();
        assert!(((rl * phi_plus.matrix()).trace().re - 0.5).abs() < 1e-15);
        // Φ⁻ has no weight on RL or DD; its correlated outcomes are RR and DA.
        assert!((rl * phi_minus().matrix()).trace().re.abs() < 1e-15);
        let rr = projector((BasisLabel::R, BasisLabel::R));
        assert!(((rr * phi_minus().matrix()).trace().re - 0.5).abs() < 1e-15);
        for s in standard_16_settings() {
            let p = projector(s);
            assert!((p * p - p).camax() < 1e-15);
            assert!((p - p.adjoint()).camax() < 1e-15);
            assert!((p.trace().re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn standard_settings_informationally_complete() {
        let s = standard_16_settings();
        assert_eq!(s.len(), 16);
        assert_eq!(projector_span_rank(&s), 16);
        for hv in [(BasisLabel::H, BasisLabel::H), (BasisLabel::H, BasisLabel::V), (BasisLabel::V, BasisLabel::H), (BasisLabel::V, BasisLabel::V)] {
            assert!(s.contains(&hv));
        }
        let diag_only: Vec<Setting> = s.iter().copied().filter(|(a, b)| matches!(a, BasisLabel::H | BasisLabel::V) && matches!(b, BasisLabel::H | BasisLabel::V)).collect();
        assert_eq!(projector_span_rank(&diag_only), 4);
    }

    #[test]
    fn simulated_count_means() {
        let rho = phi_minus();
        let hv = simulate_counts(&rho, &[(BasisLabel::H, BasisLabel::V)], 1e4, 1).unwrap();
        assert_eq!(hv[0].counts, 0);
        let mixed = DensityMatrix4::maximally_mixed();
        let n = 4e6;
        let recs = simulate_counts(&mixed, &standard_16_settings(), n, 2).unwrap();
        for r in recs {
            assert!((r.counts as f64 - n / 4.0).abs() < 5.0 * (n / 4.0).sqrt());
        }
        let da = simulate_counts(&rho, &[(BasisLabel::D, BasisLabel::A), (BasisLabel::D, BasisLabel::D)], 1e4, 3).unwrap();
        assert!((da[0].counts as f64 - 5000.0).abs() < 3.0 * 5000f64.sqrt());
        assert_eq!(da[1].counts, 0);
        let phi_plus = state_to_density_matrix(&BellState::PhiPlus.state()).unwrap();
        let dd = simulate_counts(&phi_plus, &[(BasisLabel::D, BasisLabel::D)], 1e4, 3).unwrap();
        assert!((dd[0].counts as f64 - 5000.0).abs() < 3.0 * 5000f64.sqrt());
    }

    #[test]
    fn per_setting_scaling() {
        let s = standard_16_settings();
        // Σ_k tr(P_k I/4) = 4 over the sixteen settings
        let n = mean_total_for_counts_per_setting(&DensityMatrix4::maximally_mixed(), &s, 1e5).unwrap();
        assert!((n - 4e5).abs() < 1e-6);
    }

    #[test]
    fn unphysical_rho_rejected_by_simulator() {
        let bad = DensityMatrix4::new_unchecked(Matrix4::identity() * Complex64::from(0.5));
        assert!(simulate_counts(&bad, &standard_16_settings(), 10.0, 0).is_err());
    }

    #[test]
    fn linear_inversion_exact_on_noiseless_counts() {
        for rho in [phi_minus(), DensityMatrix4::maximally_mixed()] {
            let recs = noiseless(&rho, 1e12);
            let est = linear_reconstruct(&recs).unwrap();
            assert!((est.matrix() - rho.matrix()).camax() < 1e-8);
        }
    }

    #[test]
    fn linear_inversion_can_go_negative() {
        let negative = (0..20u64)
            .filter(|&seed| {
                let recs = simulate_counts(&phi_minus(), &standard_16_settings(), 100.0, seed).unwrap();
                linear_reconstruct(&recs).unwrap().eigenvalues()[0] < 0.0
            })
            .count();
        assert!(negative > 0);
    }

    #[test]
    fn linear_inversion_rejects_incomplete_sets() {
        let recs: Vec<_> = noiseless(&phi_minus(), 1e4).into_iter().take(10).collect();
        assert!(linear_reconstruct(&recs).is_err());
    }

    #[test]
    fn lower_factor_roundtrip() {
        let m = Matrix4::from_fn(|i, j| Complex64::new((i + j) as f64 * 0.1, (i as f64 - j as f64) * 0.05)) + Matrix4::identity() * Complex64::from(2.0);
        let m = (m + m.adjoint()) * Complex64::from(0.5);
        let t = lower_factor(&m).unwrap();
        assert!((t.adjoint() * t - m).camax() < 1e-12);
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_eq!(t[(i, j)], Complex64::from(0.0));
            }
        }
        let p = params_from_t(&t);
        assert_eq!(t_from_params(&p), t);
    }

    #[test]
    fn analytic_gradient_matches_finite_difference() {
        let recs = simulate_counts(&phi_minus().mix_with_white_noise(0.8).unwrap(), &standard_16_settings(), 500.0, 9).unwrap();
        let like = Likelihood {
            projectors: recs.iter().map(|r| projector(r.setting)).collect(),
            counts: recs.iter().map(|r| r.counts as f64).collect(),
            times: recs.iter().map(|r| r.acquisition_time).collect(),
            floor: 1e-12,
        };
        let x: Vec<f64> = (0..16).map(|k| 3.0 + 0.7 * (k as f64 * 1.3).sin()).collect();
        let (_, g) = like.evaluate(&x);
        for k in 0..16 {
            let h = 1e-5;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (like.evaluate(&xp).0 - like.evaluate(&xm).0) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * fd.abs().max(1.0), "param {k}: fd {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn mle_all_equal_counts_is_maximally_mixed() {
        // Equal probabilities on all sixteen settings correspond to I/4.
        let recs: Vec<_> = standard_16_settings()
            .into_iter()
            .map(|s| MeasurementRecord { setting: s, counts: 1000, acquisition_time: 1.0 })
            .collect();
        let res = mle_reconstruct(&recs, None, &MleOptions::default()).unwrap();
        assert!((res.rho.matrix() - DensityMatrix4::maximally_mixed().matrix()).camax() < 1e-3);
        for b in BellState::ALL {
            assert!((fidelity(&res.rho, &b.state()).unwrap() - 0.25).abs() < 1e-3);
        }
    }

    #[test]
    fn mle_matches_linear_inversion_for_full_rank_data() {
        // With a positive definite linear estimate both maximize the same likelihood.
        let rho = phi_minus().mix_with_white_noise(0.9).unwrap();
        let recs = simulate_counts(&rho, &standard_16_settings(), 4e5, 503).unwrap();
        let lin = linear_reconstruct(&recs).unwrap();
        assert!(lin.eigenvalues()[0] > 0.0);
        let res = mle_reconstruct(&recs, None, &MleOptions::default()).unwrap();
        assert!((res.rho.matrix() - lin.matrix()).camax() < 1e-5);
        assert!(res.log_likelihood_history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mle_rejects_empty_counts() {
        let recs: Vec<_> = standard_16_settings()
            .into_iter()
            .map(|s| MeasurementRecord { setting: s, counts: 0, acquisition_time: 1.0 })
            .collect();
        assert!(mle_reconstruct(&recs, None, &MleOptions::default()).is_err());
    }

    #[test]
    fn mle_reports_non_convergence_with_best_estimate() {
        let recs = simulate_counts(&phi_minus(), &standard_16_settings(), 1e5, 4).unwrap();
        let opts = MleOptions { max_iterations: 2, ..Default::default() };
        match mle_reconstruct(&recs, None, &opts) {
            Err(Error::NotConverged { iterations, best, .. }) => {
                assert_eq!(iterations, 2);
                best.rho.check().unwrap();
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn fidelity_and_concurrence_examples() {
        let rho = phi_minus();
        assert!((fidelity(&rho, &BellState::PhiMinus.state()).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix4::maximally_mixed();
        for b in BellState::ALL {
            assert!((fidelity(&mixed, &b.state()).unwrap() - 0.25).abs() < 1e-12);
            let c = concurrence(&state_to_density_matrix(&b.state()).unwrap()).unwrap();
            assert!((c - 1.0).abs() < 1e-7, "{b}: {c}");
        }
        let hh = state_to_density_matrix(&TwoPhotonState::from_real([1.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!(concurrence(&hh).unwrap() < 1e-7);
        for (p, f, c) in [(0.76, 0.82, 0.64), (0.9, 0.925, 0.85)] {
            let w = rho.mix_with_white_noise(p).unwrap();
            assert!((fidelity(&w, &BellState::PhiMinus.state()).unwrap() - f).abs() < 1e-12);
            assert!((concurrence(&w).unwrap() - c).abs() < 1e-7);
        }
    }

    #[test]
    fn unphysical_inputs_rejected_by_metrics() {
        let bad = DensityMatrix4::new_unchecked(Matrix4::identity() * Complex64::from(0.5));
        assert!(fidelity(&bad, &BellState::PhiPlus.state()).is_err());
        assert!(concurrence(&bad).is_err());
    }

    #[test]
    fn accidental_subtraction_floors_at_zero() {
        let recs = vec![
            MeasurementRecord { setting: (BasisLabel::H, BasisLabel::H), counts: 100, acquisition_time: 2.0 },
            MeasurementRecord { setting: (BasisLabel::H, BasisLabel::V), counts: 3, acquisition_time: 2.0 },
        ];
        let out = subtract_accidentals(&recs, 5.0);
        assert_eq!(out[0].counts, 90);
        assert_eq!(out[1].counts, 0);
    }

    #[test]
    fn handedness_switch_exchanges_r_and_l() {
        let r_flipped = projector_with((BasisLabel::R, BasisLabel::H), Handedness::Flipped);
        let l_standard = projector((BasisLabel::L, BasisLabel::H));
        assert!((r_flipped - l_standard).camax() < 1e-15);
    }
}
