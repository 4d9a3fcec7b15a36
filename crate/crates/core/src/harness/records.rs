//! Time-series sinks: NDJSON with a fixed key order plus a companion CSV.
//!
//! Every real number is written with 17 significant digits, so a read-back
//! reproduces the recorded `f64` exactly. Non-finite values become `null`
//! and read back as NaN.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};

use crate::energy::EnergyReport;
use crate::error::{NspError, Result};

/// Shells with `αₖ²` at or below this are omitted from records.
pub const ALPHA_RECORD_FLOOR: f64 = 1e-14;

/// NDJSON key order; the CSV header follows it with the shell list
/// summarized as `alpha_sq_total, alpha_sq_shells`.
pub const RECORD_KEYS: [&str; 13] = [
    "t",
    "h_norm",
    "c_norm",
    "i_norm",
    "u_norm",
    "phi_norm",
    "v",
    "e",
    "mass_defect",
    "min_density",
    "positivity_lost",
    "guard_active",
    "alpha_sq",
];

pub const CSV_HEADER: &str = "t,h_norm,c_norm,i_norm,u_norm,phi_norm,v,e,mass_defect,min_density,\
positivity_lost,guard_active,alpha_sq_total,alpha_sq_shells";

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct NormRecord {
    #[serde(deserialize_with = "real")]
    pub t: f64,
    #[serde(deserialize_with = "real")]
    pub h_norm: f64,
    #[serde(deserialize_with = "real")]
    pub c_norm: f64,
    #[serde(deserialize_with = "real")]
    pub i_norm: f64,
    #[serde(deserialize_with = "real")]
    pub u_norm: f64,
    #[serde(deserialize_with = "real")]
    pub phi_norm: f64,
    #[serde(deserialize_with = "real")]
    pub v: f64,
    #[serde(deserialize_with = "real")]
    pub e: f64,
    #[serde(deserialize_with = "real")]
    pub mass_defect: f64,
    #[serde(deserialize_with = "real")]
    pub min_density: f64,
    pub positivity_lost: bool,
    pub guard_active: bool,
    /// `(k, αₖ²)` for shells above [`ALPHA_RECORD_FLOOR`], ascending in `k`.
    pub alpha_sq: Vec<(i32, f64)>,
}

fn real<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl From<&EnergyReport> for NormRecord {
    fn from(r: &EnergyReport) -> Self {
        NormRecord {
            t: r.t,
            h_norm: r.h_norm,
            c_norm: r.c_norm,
            i_norm: r.i_norm,
            u_norm: r.u_norm,
            phi_norm: r.phi_norm,
            v: r.v,
            e: r.e,
            mass_defect: r.mass_defect,
            min_density: r.min_density,
            positivity_lost: r.positivity_lost,
            guard_active: r.guard_active,
            alpha_sq: r
                .shells
                .iter()
                .filter(|s| s.alpha_sq > ALPHA_RECORD_FLOOR)
                .map(|s| (s.k, s.alpha_sq))
                .collect(),
        }
    }
}

fn num(out: &mut String, v: f64) {
    if v.is_finite() {
        write!(out, "{v:.16e}").unwrap();
    } else {
        out.push_str("null");
    }
}

fn reals(r: &NormRecord) -> [f64; 10] {
    [
        r.t,
        r.h_norm,
        r.c_norm,
        r.i_norm,
        r.u_norm,
        r.phi_norm,
        r.v,
        r.e,
        r.mass_defect,
        r.min_density,
    ]
}

/// One NDJSON line (without the newline).
pub fn record_line(r: &NormRecord) -> String {
    let mut out = String::from("{");
    for (key, v) in RECORD_KEYS.iter().zip(reals(r)) {
        write!(out, "\"{key}\":").unwrap();
        num(&mut out, v);
        out.push(',');
    }
    write!(
        out,
        "\"positivity_lost\":{},\"guard_active\":{},\"alpha_sq\":[",
        r.positivity_lost, r.guard_active
    )
    .unwrap();
    for (i, (k, a)) in r.alpha_sq.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "[{k},").unwrap();
        num(&mut out, *a);
        out.push(']');
    }
    out.push_str("]}");
    out
}

fn csv_line(r: &NormRecord) -> String {
    let mut out = String::new();
    for v in reals(r) {
        num(&mut out, v);
        out.push(',');
    }
    let total: f64 = r.alpha_sq.iter().map(|(_, a)| a).sum();
    write!(out, "{},{},", r.positivity_lost, r.guard_active).unwrap();
    num(&mut out, total);
    write!(out, ",{}", r.alpha_sq.len()).unwrap();
    out
}

/// Path of the CSV written next to `path`.
pub fn csv_path(path: &Path) -> PathBuf {
    path.with_extension("csv")
}

/// Writes `records` as NDJSON to `path` and as CSV to [`csv_path`]. An
/// empty list gives an empty NDJSON file and a header-only CSV.
pub fn write_records(records: &[NormRecord], path: &Path) -> Result<()> {
    let mut json = String::new();
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in records {
        json.push_str(&record_line(r));
        json.push('\n');
        csv.push_str(&csv_line(r));
        csv.push('\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| NspError::io(dir, e))?;
    }
    fs::write(path, json).map_err(|e| NspError::io(path, e))?;
    let cp = csv_path(path);
    fs::write(&cp, csv).map_err(|e| NspError::io(&cp, e))
}

pub fn read_records(path: &Path) -> Result<Vec<NormRecord>> {
    let text = fs::read_to_string(path).map_err(|e| NspError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                NspError::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)),
                )
            })
        })
        .collect()
}

/// `(t, values)` samples of a derived series, written as
/// `{"t":...,"<label>":[...]}` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub values: Vec<f64>,
}

pub fn write_series(points: &[SeriesPoint], label: &str, path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in points {
        out.push_str("{\"t\":");
        num(&mut out, p.t);
        write!(out, ",\"{label}\":[").unwrap();
        for (i, v) in p.values.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            num(&mut out, *v);
        }
        out.push_str("]}\n");
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| NspError::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| NspError::io(path, e))
}
