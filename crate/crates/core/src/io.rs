//! Plain-text exchange formats: tomography counts CSV, result JSON and the
//! CSV tables written for plotting.
//!
//! Floats are written with nine significant digits in scientific notation
//! and `.` as the decimal separator.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::photon_stats::{CoincidenceHistogram, TimeTagStream};
use crate::polarization::DensityMatrix4;
use crate::spdc::{FrequencyAngularSpectrum, JointRateGrid};
use crate::tomography::{BasisLabel, MeasurementRecord, TomographyResult};
use crate::{Error, Result};

/// Nine significant digits.
pub fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Serialize a density matrix as nested `[[re, im], ...]` rows.
pub fn serialize_density<S: Serializer>(rho: &DensityMatrix4, s: S) -> std::result::Result<S::Ok, S::Error> {
    let m = rho.matrix();
    let mut seq = s.serialize_seq(Some(4))?;
    for i in 0..4 {
        let row: Vec<[f64; 2]> = (0..4).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

pub fn density_to_nested(rho: &DensityMatrix4) -> Vec<Vec<[f64; 2]>> {
    let m = rho.matrix();
    (0..4).map(|i| (0..4).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CountsRow {
    basis_1: String,
    basis_2: String,
    counts: u64,
    seconds: f64,
}

/// Read `basis_1,basis_2,counts,seconds` rows; each setting may appear once.
pub fn read_counts_csv<R: Read>(reader: R) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["basis_1", "basis_2", "counts", "seconds"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse(format!(
            "counts file header must be '{}', found '{}'",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, row) in rdr.deserialize::<CountsRow>().enumerate() {
        let row = row?;
        let a: BasisLabel = row.basis_1.parse()?;
        let b: BasisLabel = row.basis_2.parse()?;
        if !seen.insert((a, b)) {
            return Err(Error::Parse(format!("setting {a}{b} appears more than once (data row {})", line + 1)));
        }
        out.push(MeasurementRecord {
            setting: (a, b),
            counts: row.counts,
            acquisition_time: row.seconds,
        });
    }
    Ok(out)
}

pub fn write_counts_csv<W: Write>(writer: W, records: &[MeasurementRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["basis_1", "basis_2", "counts", "seconds"])?;
    for r in records {
        w.write_record([
            r.setting.0.to_string(),
            r.setting.1.to_string(),
            r.counts.to_string(),
            fmt9(r.acquisition_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Result JSON: `rho` as nested `[re, im]` pairs plus the scalar metrics.
pub fn tomography_json(result: &TomographyResult) -> serde_json::Value {
    serde_json::json!({
        "rho": density_to_nested(&result.rho),
        "fidelity": result.fidelity,
        "concurrence": result.concurrence,
        "purity": result.purity,
        "log_likelihood": result.log_likelihood,
        "converged": result.converged,
        "iterations": result.iterations,
    })
}

pub fn write_time_tags_csv<W: Write>(mut w: W, s1: &TimeTagStream, s2: &TimeTagStream) -> Result<()> {
    writeln!(w, "detector,time_s")?;
    for (det, stream) in [(1, s1), (2, s2)] {
        for t in stream.times() {
            writeln!(w, "{det},{}", fmt9(*t))?;
        }
    }
    Ok(())
}

pub fn read_time_tags_csv<R: Read>(reader: R) -> Result<(TimeTagStream, TimeTagStream)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["detector", "time_s"] {
        return Err(Error::Parse("time-tag file header must be 'detector,time_s'".into()));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for row in rdr.deserialize::<(u8, f64)>() {
        match row? {
            (1, t) => a.push(t),
            (2, t) => b.push(t),
            (d, _) => return Err(Error::Parse(format!("detector must be 1 or 2, got {d}"))),
        }
    }
    Ok((TimeTagStream::new(a), TimeTagStream::new(b)))
}

pub fn write_histogram_csv<W: Write>(mut w: W, hist: &CoincidenceHistogram) -> Result<()> {
    writeln!(w, "tau_s,counts")?;
    for (t, c) in hist.tau_axis.iter().zip(&hist.counts) {
        writeln!(w, "{},{c}", fmt9(*t))?;
    }
    Ok(())
}

fn thz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI) * 1e-12
}

/// Joint grid rows `omega_thz,theta_s_rad,theta_i_rad,rate`; the first
/// column is the ordinary signal frequency in THz.
pub fn write_joint_grid_csv<W: Write>(mut w: W, grid: &JointRateGrid) -> Result<()> {
    writeln!(w, "omega_thz,theta_s_rad,theta_i_rad,rate")?;
    for (a, &omega) in grid.omega_s_axis.iter().enumerate() {
        for (b, &ts) in grid.theta_s_axis.iter().enumerate() {
            for (c, &ti) in grid.theta_i_axis.iter().enumerate() {
                writeln!(w, "{},{},{},{}", fmt9(thz(omega)), fmt9(ts), fmt9(ti), fmt9(grid.get(a, b, c)))?;
            }
        }
    }
    Ok(())
}

/// Marginal spectrum rows `omega_thz,theta_s_rad,rate`.
pub fn write_spectrum_csv<W: Write>(mut w: W, s: &FrequencyAngularSpectrum) -> Result<()> {
    writeln!(w, "omega_thz,theta_s_rad,rate")?;
    for (a, &omega) in s.omega_axis.iter().enumerate() {
        for (b, &t) in s.theta_axis.iter().enumerate() {
            writeln!(w, "{},{},{}", fmt9(thz(omega)), fmt9(t), fmt9(s.get(a, b)))?;
        }
    }
    Ok(())
}
