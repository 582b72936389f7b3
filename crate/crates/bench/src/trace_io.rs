//! CSV persistence for run traces and suite summaries.

use std::path::Path;

use bregman_dlnn::TraceRow;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const TRACE_HEADER: [&str; 8] =
    ["iter", "objective", "rel_objective", "elapsed_s", "gamma", "L_bar", "L_under", "backtracks"];

/// 17 significant digits: parses back to the identical `f64`.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(TRACE_HEADER).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([
            r.iter.to_string(),
            float(r.objective),
            opt_float(r.rel_objective),
            float(r.elapsed_s),
            opt_float(r.gamma),
            opt_float(r.l_bar),
            opt_float(r.l_under),
            r.backtracks.map(|b| b.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> BenchError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => BenchError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        BenchError::parse(path, e.to_string())
    }
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| BenchError::parse(path, format!("line {line}: bad {name} value {s:?}")))
}

fn opt_field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, s: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(path, line, name, s).map(Some)
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(BenchError::parse(path, format!("unexpected trace header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let f = |j: usize| rec.get(j).unwrap_or("");
        rows.push(TraceRow {
            iter: field(path, line, "iter", f(0))?,
            objective: field(path, line, "objective", f(1))?,
            rel_objective: opt_field(path, line, "rel_objective", f(2))?,
            elapsed_s: field(path, line, "elapsed_s", f(3))?,
            gamma: opt_field(path, line, "gamma", f(4))?,
            l_bar: opt_field(path, line, "L_bar", f(5))?,
            l_under: opt_field(path, line, "L_under", f(6))?,
            backtracks: opt_field(path, line, "backtracks", f(7))?,
        });
    }
    Ok(rows)
}

/// One line of the suite summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub seed: u64,
    pub final_objective: f64,
    pub rel_objective: f64,
    pub iterations: usize,
    pub elapsed_s: f64,
    pub objective_evals: usize,
    pub distance_evals: usize,
    /// `ok`, or the reason the run stopped early.
    pub status: String,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}
