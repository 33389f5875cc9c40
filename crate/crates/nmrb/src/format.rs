//! Serialized forms: complex matrices as `{rows, cols, re, im}`, curve tables
//! as CSV with the header `m,mean,stderr,n_samples`.
use nmrb_core::rb::AsfCurve;
use nmrb_core::{ComplexMatrix, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Entries below this modulus are skipped when the global phase of a learned
/// unitary is fixed before writing.
pub const PHASE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&ComplexMatrix> for MatrixRecord {
    fn from(m: &ComplexMatrix) -> Self {
        let part = |f: fn(&C64) -> f64| (0..m.rows()).map(|r| (0..m.cols()).map(|c| f(&m[(r, c)])).collect()).collect();
        Self { rows: m.rows(), cols: m.cols(), re: part(|z| z.re), im: part(|z| z.im) }
    }
}

impl MatrixRecord {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let ok = |a: &Vec<Vec<f64>>| a.len() == self.rows && a.iter().all(|row| row.len() == self.cols);
        if !ok(&self.re) || !ok(&self.im) {
            return Err(CliError::Input(format!("matrix record does not have the declared shape {}x{}", self.rows, self.cols)));
        }
        let data = self.re.iter().flatten().zip(self.im.iter().flatten()).map(|(&a, &b)| C64::new(a, b)).collect();
        Ok(ComplexMatrix::from_vec(self.rows, self.cols, data)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub m: usize,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

pub fn curve_rows(curve: &AsfCurve) -> Vec<CurveRow> {
    curve
        .lengths
        .iter()
        .zip(curve.means.iter().zip(&curve.stderrs))
        .map(|(&m, (&mean, &stderr))| CurveRow { m, mean, stderr, n_samples: curve.n_samples })
        .collect()
}

pub fn curve_from_rows(rows: &[CurveRow]) -> Result<AsfCurve> {
    let first = rows.first().ok_or_else(|| CliError::Input("curve table has no rows".into()))?;
    if rows.iter().any(|r| r.n_samples != first.n_samples) {
        return Err(CliError::Input("n_samples differs between rows".into()));
    }
    let curve = AsfCurve {
        lengths: rows.iter().map(|r| r.m).collect(),
        means: rows.iter().map(|r| r.mean).collect(),
        stderrs: rows.iter().map(|r| r.stderr).collect(),
        n_samples: first.n_samples,
    };
    curve.validate()?;
    Ok(curve)
}

pub fn write_curve_csv(curve: &AsfCurve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in curve_rows(curve) {
        w.serialize(row).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_curve_csv(text: &str) -> Result<AsfCurve> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| CliError::Input(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["m", "mean", "stderr", "n_samples"] {
        return Err(CliError::Input(format!("expected header m,mean,stderr,n_samples, found {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let rows = r
        .deserialize()
        .enumerate()
        .map(|(k, row)| row.map_err(|e| CliError::Input(format!("row {}: {e}", k + 2))))
        .collect::<Result<Vec<CurveRow>>>()?;
    curve_from_rows(&rows)
}

/// JSON form of a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub rows: Vec<CurveRow>,
}

impl CurveRecord {
    pub fn new(curve: &AsfCurve) -> Self {
        Self { rows: curve_rows(curve) }
    }
}

/// Reads a matrix from either a bare matrix record or an object carrying it
/// under `lambda` (as written by `learn`).
pub fn read_matrix_json(text: &str) -> Result<ComplexMatrix> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
    let inner = match value.get("lambda") {
        Some(v) => v.clone(),
        None => value,
    };
    let record: MatrixRecord = serde_json::from_value(inner).map_err(|e| CliError::Input(e.to_string()))?;
    record.to_matrix()
}
