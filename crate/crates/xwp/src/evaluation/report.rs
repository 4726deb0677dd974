//! Report serialization: a benchmark run lands on disk as three files in
//! one directory.
//!
//! - `report.json` holds the whole [`BenchmarkReport`], provenance included,
//!   and is the round-trippable source of truth.
//! - `report.csv` is the headline table, one row per method.
//! - `curves.csv` lists every mean deletion-curve point, one row per
//!   `(method, fraction)` pair.
//!
//! Writing the same report twice produces byte-identical files, so report
//! directories can be diffed across runs.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::evaluation::benchmark::BenchmarkReport;

/// Paths of the files a [`write_report`] call produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportFiles {
    pub json: PathBuf,
    pub table: PathBuf,
    pub curves: PathBuf,
}

/// Writes `report.json`, `report.csv`, and `curves.csv` into `dir`,
/// creating the directory if needed, and returns the paths written.
pub fn write_report(report: &BenchmarkReport, dir: &Path) -> Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        json: dir.join("report.json"),
        table: dir.join("report.csv"),
        curves: dir.join("curves.csv"),
    };

    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(&files.json, json)?;

    let mut table = csv::Writer::from_path(&files.table)?;
    table.write_record(["method", "dataset", "AD", "AUC", "n_samples"])?;
    for row in &report.rows {
        table.write_record([
            row.method.as_str(),
            row.dataset.as_str(),
            &format_float(row.average_drop),
            &format_float(row.deletion_auc),
            &row.n_samples.to_string(),
        ])?;
    }
    table.flush()?;

    let mut curves = csv::Writer::from_path(&files.curves)?;
    curves.write_record(["method", "fraction", "mean_confidence"])?;
    for curve in &report.mean_curves {
        for (f, c) in curve.fractions_removed.iter().zip(&curve.mean_confidences) {
            curves.write_record([
                curve.method.as_str(),
                &format_float(*f),
                &format_float(*c),
            ])?;
        }
    }
    curves.flush()?;

    Ok(files)
}

/// Reads a `report.json` previously produced by [`write_report`].
pub fn read_report(path: &Path) -> Result<BenchmarkReport> {
    let bytes = fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Shortest decimal form that parses back to the same value, matching the
/// JSON encoding so the two files never disagree in a diff.
fn format_float(v: f64) -> String {
    serde_json::to_string(&v).expect("finite float")
}
