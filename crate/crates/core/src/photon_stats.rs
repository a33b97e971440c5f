//! Two-detector coincidence experiments in a Hanbury-Brown–Twiss layout:
//! Monte Carlo time tags, start–stop coincidence histograms, g2(τ)
//! normalization and the analytic accidental-coincidence oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Detection probability in `[0, 1]`.
    pub efficiency: f64,
    /// Hz.
    pub dark_rate: f64,
    /// Gaussian timing jitter, s.
    pub jitter_sigma: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_rate: f64, jitter_sigma: f64) -> Result<Self> {
        let d = Self {
            efficiency,
            dark_rate,
            jitter_sigma,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::domain(format!("efficiency must lie in [0, 1], got {}", self.efficiency)));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::domain(format!("dark_rate must be non-negative, got {}", self.dark_rate)));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::domain(format!("jitter_sigma must be non-negative, got {}", self.jitter_sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    /// Pair generation rate per mW of pump, Hz/mW.
    pub pair_rate_per_mw: f64,
    /// Uncorrelated background reaching arm 1, Hz.
    pub uncorrelated_background_1: f64,
    /// Uncorrelated background reaching arm 2, Hz.
    pub uncorrelated_background_2: f64,
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair_rate_per_mw", self.pair_rate_per_mw),
            ("uncorrelated_background_1", self.uncorrelated_background_1),
            ("uncorrelated_background_2", self.uncorrelated_background_2),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Sorted arrival times of one detector, s.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeTagStream(Vec<f64>);

impl TimeTagStream {
    /// Sorts the tags.
    pub fn new(mut tags: Vec<f64>) -> Self {
        tags.sort_by(|a, b| a.total_cmp(b));
        Self(tags)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self(self.0.iter().map(|t| t + delta).collect())
    }
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Numerical(format!("Poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

fn uniform_tags(rng: &mut ChaCha8Rng, rate: f64, duration: f64, out: &mut Vec<f64>) -> Result<()> {
    let n = poisson_count(rng, rate * duration)?;
    out.extend((0..n).map(|_| rng.random::<f64>() * duration));
    Ok(())
}

/// Simulate both detector streams for `duration` seconds.
///
/// Pairs arrive as a Poisson process at `pair_rate_per_mw · power_mw`.
/// Each photon of a pair is detected independently with its detector's
/// efficiency and Gaussian jitter; dark counts and per-arm background are
/// independent Poisson processes.
pub fn simulate_time_tags(
    source: &SourceModel,
    det1: &DetectorModel,
    det2: &DetectorModel,
    power_mw: f64,
    duration: f64,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream)> {
    source.validate()?;
    det1.validate()?;
    det2.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::domain(format!("duration must be positive, got {duration}")));
    }
    if !(power_mw >= 0.0 && power_mw.is_finite()) {
        return Err(Error::domain(format!("pump power must be non-negative, got {power_mw} mW")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = |sigma: f64| Normal::new(0.0, sigma).expect("sigma validated non-negative");
    let (j1, j2) = (jitter(det1.jitter_sigma), jitter(det2.jitter_sigma));
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();

    let pairs = poisson_count(&mut rng, source.pair_rate_per_mw * power_mw * duration)?;
    for _ in 0..pairs {
        let t = rng.random::<f64>() * duration;
        if rng.random::<f64>() < det1.efficiency {
            s1.push(t + j1.sample(&mut rng));
        }
        if rng.random::<f64>() < det2.efficiency {
            s2.push(t + j2.sample(&mut rng));
        }
    }
    uniform_tags(&mut rng, det1.dark_rate + source.uncorrelated_background_1, duration, &mut s1)?;
    uniform_tags(&mut rng, det2.dark_rate + source.uncorrelated_background_2, duration, &mut s2)?;
    Ok((TimeTagStream::new(s1), TimeTagStream::new(s2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width: f64,
    /// Bin centres, s; the middle bin is centred on τ = 0.
    pub tau_axis: Vec<f64>,
    pub counts: Vec<u64>,
    /// Acquisition time, s.
    pub duration: f64,
}

impl CoincidenceHistogram {
    pub fn zero_bin(&self) -> usize {
        self.tau_axis.len() / 2
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Histogram all cross-pairs with `τ = t2 − t1` inside `±tau_half_range`.
///
/// Bins have width `bin_width` and are centred on integer multiples of it;
/// the half range is rounded to a whole number of bins.
pub fn coincidence_histogram(
    s1: &TimeTagStream,
    s2: &TimeTagStream,
    bin_width: f64,
    tau_half_range: f64,
    duration: f64,
) -> Result<CoincidenceHistogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::domain(format!("bin width must be positive, got {bin_width}")));
    }
    if !(tau_half_range >= 0.0 && tau_half_range.is_finite()) {
        return Err(Error::domain(format!("tau range must be non-negative, got {tau_half_range}")));
    }
    let half_bins = (tau_half_range / bin_width).round() as i64;
    let n_bins = (2 * half_bins + 1) as usize;
    let lo = -(half_bins as f64 + 0.5) * bin_width;
    let hi = (half_bins as f64 + 0.5) * bin_width;
    let mut counts = vec![0u64; n_bins];
    let t2 = s2.times();
    let mut start = 0usize;
    for &t1 in s1.times() {
        while start < t2.len() && t2[start] - t1 < lo {
            start += 1;
        }
        for &t in &t2[start..] {
            let tau = t - t1;
            if tau >= hi {
                break;
            }
            let j = ((tau - lo) / bin_width).floor() as usize;
            counts[j.min(n_bins - 1)] += 1;
        }
    }
    let tau_axis = (-half_bins..=half_bins).map(|j| j as f64 * bin_width).collect();
    Ok(CoincidenceHistogram {
        bin_width,
        tau_axis,
        counts,
        duration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Curve {
    pub tau_axis: Vec<f64>,
    pub g2: Vec<f64>,
    pub g2_zero: f64,
    /// Mean counts per sideband bin.
    pub baseline: f64,
    pub sideband_bins: usize,
}

/// Mean counts per bin over `|τ| > exclusion_half_width`, and the number
/// of such bins.
fn sideband_baseline(hist: &CoincidenceHistogram, exclusion_half_width: f64) -> Result<(f64, usize)> {
    let side: Vec<u64> = hist
        .tau_axis
        .iter()
        .zip(&hist.counts)
        .filter(|(t, _)| t.abs() > exclusion_half_width)
        .map(|(_, &c)| c)
        .collect();
    if side.len() < 5 {
        return Err(Error::domain(format!(
            "need at least 5 sideband bins outside ±{exclusion_half_width:.3e} s, found {}",
            side.len()
        )));
    }
    Ok((side.iter().sum::<u64>() as f64 / side.len() as f64, side.len()))
}

/// Normalize a histogram by its accidental baseline: the mean of bins with
/// `|τ| > exclusion_half_width`.
pub fn g2_from_histogram(hist: &CoincidenceHistogram, exclusion_half_width: f64) -> Result<G2Curve> {
    let (baseline, sideband_bins) = sideband_baseline(hist, exclusion_half_width)?;
    if baseline <= 0.0 {
        return Err(Error::Numerical("insufficient accidentals; extend duration".into()));
    }
    let g2: Vec<f64> = hist.counts.iter().map(|&c| c as f64 / baseline).collect();
    Ok(G2Curve {
        tau_axis: hist.tau_axis.clone(),
        g2_zero: g2[hist.zero_bin()],
        g2,
        baseline,
        sideband_bins,
    })
}

/// Default exclusion half-width: five combined jitter sigmas, and never
/// less than one bin.
pub fn default_exclusion(det1: &DetectorModel, det2: &DetectorModel, bin_width: f64) -> f64 {
    let sigma = det1.jitter_sigma.hypot(det2.jitter_sigma);
    (5.0 * sigma).max(bin_width)
}

/// `1 + R_c / (R_1 R_2 Δt)`.
pub fn analytic_g2_zero(true_coincidence_rate: f64, singles_rate_1: f64, singles_rate_2: f64, bin_width: f64) -> Result<f64> {
    if !(singles_rate_1 > 0.0 && singles_rate_2 > 0.0) {
        return Err(Error::domain("singles rates must be positive"));
    }
    if !(bin_width > 0.0) {
        return Err(Error::domain("bin width must be positive"));
    }
    if !(true_coincidence_rate >= 0.0) {
        return Err(Error::domain("true coincidence rate must be non-negative"));
    }
    Ok(1.0 + true_coincidence_rate / (singles_rate_1 * singles_rate_2 * bin_width))
}

/// Expected singles rates `(R_1, R_2)` in Hz.
pub fn expected_singles(source: &SourceModel, det1: &DetectorModel, det2: &DetectorModel, power_mw: f64) -> (f64, f64) {
    let pairs = source.pair_rate_per_mw * power_mw;
    (
        pairs * det1.efficiency + det1.dark_rate + source.uncorrelated_background_1,
        pairs * det2.efficiency + det2.dark_rate + source.uncorrelated_background_2,
    )
}

/// Divide a measured rate by the product of the transmission chain.
pub fn loss_corrected_rate(raw_rate: f64, transmission_chain: &[f64]) -> Result<f64> {
    let mut product = 1.0;
    for (k, &t) in transmission_chain.iter().enumerate() {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::domain(format!(
                "transmission element {k} must lie in (0, 1], got {t}"
            )));
        }
        product *= t;
    }
    Ok(raw_rate / product)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSettings {
    pub bin_width: f64,
    pub tau_half_range: f64,
    /// `None` uses [`default_exclusion`].
    pub exclusion_half_width: Option<f64>,
}

impl Default for HistogramSettings {
    fn default() -> Self {
        Self {
            bin_width: 1e-9,
            tau_half_range: 100e-9,
            exclusion_half_width: None,
        }
    }
}

/// Background-subtracted coincidence rate inside the exclusion window, Hz.
pub fn peak_coincidence_rate(hist: &CoincidenceHistogram, exclusion_half_width: f64) -> Result<f64> {
    let (baseline, _) = sideband_baseline(hist, exclusion_half_width)?;
    let excess: f64 = hist
        .tau_axis
        .iter()
        .zip(&hist.counts)
        .filter(|(t, _)| t.abs() <= exclusion_half_width)
        .map(|(_, &c)| c as f64 - baseline)
        .sum();
    Ok(excess / hist.duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub power_mw: f64,
    pub coincidence_rate: f64,
}

/// Simulate and histogram at each pump power; seeds are `seed + index`.
pub fn power_sweep(
    source: &SourceModel,
    det1: &DetectorModel,
    det2: &DetectorModel,
    powers_mw: &[f64],
    duration: f64,
    seed: u64,
    settings: &HistogramSettings,
) -> Result<Vec<SweepPoint>> {
    if powers_mw.is_empty() {
        return Err(Error::domain("power list is empty"));
    }
    let exclusion = settings
        .exclusion_half_width
        .unwrap_or_else(|| default_exclusion(det1, det2, settings.bin_width));
    powers_mw
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let (s1, s2) = simulate_time_tags(source, det1, det2, p, duration, seed.wrapping_add(k as u64))?;
            let hist = coincidence_histogram(&s1, &s2, settings.bin_width, settings.tau_half_range, duration)?;
            Ok(SweepPoint {
                power_mw: p,
                coincidence_rate: peak_coincidence_rate(&hist, exclusion)?,
            })
        })
        .collect()
}

/// Ordinary least-squares line `y = slope·x + intercept` with its R².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(points: &[SweepPoint]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::domain("linear fit needs at least two points"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.power_mw).sum::<f64>() / n;
    let my = points.iter().map(|p| p.coincidence_rate).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.power_mw - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.power_mw - mx) * (p.coincidence_rate - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("linear fit needs at least two distinct powers"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.coincidence_rate - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.coincidence_rate - slope * p.power_mw - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
