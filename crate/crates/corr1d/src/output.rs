//! CSV tables and the JSON run manifest.
//!
//! Floats are written in their shortest round-trip form, so parsing a
//! written file recovers every value bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::presets::{CurveInfo, Plan, Resolved};
use crate::runner::{CurveSummary, DeviationRow, ResultRow, RunOutput, ShiftRow, TwoAtomRow};

pub const RESULTS_HEADER: [&str; 8] = [
    "curve",
    "delta_over_gamma_t",
    "mean_T",
    "stderr_T",
    "mean_lnT_scaled",
    "mft_T",
    "n_used",
    "n_diverged",
];
pub const SHIFT_COLUMNS: [&str; 3] = ["shift_over_gamma_t", "uncertainty", "cls_prediction"];
pub const TWO_ATOM_HEADER: [&str; 7] = ["curve", "delta_over_gamma_t", "re_t12", "im_t12", "re_mft", "im_mft", "r"];

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: row {row}: {message}")]
    Format { path: PathBuf, row: usize, message: String },
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>, OutputError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|source| OutputError::Csv {
            path: path.to_owned(),
            source,
        })
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), OutputError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let csv_err = |source| OutputError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<(), OutputError> {
    write_rows(
        path,
        &RESULTS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.curve.clone(),
                format_float(r.delta),
                format_float(r.mean_t),
                format_float(r.stderr_t),
                format_float(r.mean_ln_t_scaled),
                format_float(r.mft_t),
                r.n_used.to_string(),
                r.n_diverged.to_string(),
            ]
        }),
    )
}

pub fn write_shifts(path: &Path, axis: &str, rows: &[ShiftRow]) -> Result<(), OutputError> {
    let header = ["curve", axis, SHIFT_COLUMNS[0], SHIFT_COLUMNS[1], SHIFT_COLUMNS[2]];
    write_rows(
        path,
        &header,
        rows.iter().map(|r| {
            vec![
                r.curve.clone(),
                format_float(r.x),
                format_float(r.shift),
                format_float(r.uncertainty),
                format_float(r.cls_prediction),
            ]
        }),
    )
}

pub fn write_deviation(path: &Path, axis: &str, rows: &[DeviationRow]) -> Result<(), OutputError> {
    write_rows(
        path,
        &["curve", axis, "r"],
        rows.iter().map(|r| vec![r.curve.clone(), format_float(r.x), format_float(r.r)]),
    )
}

pub fn write_two_atom(path: &Path, rows: &[TwoAtomRow]) -> Result<(), OutputError> {
    write_rows(
        path,
        &TWO_ATOM_HEADER,
        rows.iter().map(|r| {
            vec![
                r.curve.clone(),
                format_float(r.delta),
                format_float(r.t12.re),
                format_float(r.t12.im),
                format_float(r.mft.re),
                format_float(r.mft.im),
                format_float(r.r),
            ]
        }),
    )
}

/// A CSV file as header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, OutputError> {
        let csv_err = |source| OutputError::Csv {
            path: path.to_owned(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_owned).collect()))
            .collect::<Result<_, _>>()
            .map_err(csv_err)?;
        Ok(Self {
            path: path.to_owned(),
            headers,
            rows,
        })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn float(&self, row: usize, col: usize) -> Result<f64, OutputError> {
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| OutputError::Format {
            path: self.path.clone(),
            row: row + 1,
            message: format!("`{cell}` in column `{}` is not a number", self.headers[col]),
        })
    }
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, OutputError> {
    let table = Table::read(path)?;
    if table.headers != RESULTS_HEADER {
        return Err(OutputError::Format {
            path: path.to_owned(),
            row: 0,
            message: "unexpected results header".to_owned(),
        });
    }
    (0..table.rows.len())
        .map(|i| {
            let count = |col: usize| {
                table.rows[i][col].parse::<usize>().map_err(|_| OutputError::Format {
                    path: path.to_owned(),
                    row: i + 1,
                    message: format!("`{}` is not a count", table.rows[i][col]),
                })
            };
            Ok(ResultRow {
                curve: table.rows[i][0].clone(),
                delta: table.float(i, 1)?,
                mean_t: table.float(i, 2)?,
                stderr_t: table.float(i, 3)?,
                mean_ln_t_scaled: table.float(i, 4)?,
                mft_t: table.float(i, 5)?,
                n_used: count(6)?,
                n_diverged: count(7)?,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct CurveRecord<'a> {
    #[serde(flatten)]
    info: &'a CurveInfo,
    n_failed: usize,
    n_diverged: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

impl<'a> From<&'a CurveSummary> for CurveRecord<'a> {
    fn from(c: &'a CurveSummary) -> Self {
        Self {
            info: &c.info,
            n_failed: c.n_failed,
            n_diverged: c.n_diverged,
            note: c.note.as_deref(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    code_version: &'a str,
    seed: u64,
    threads: usize,
    wall_time_seconds: f64,
    config: &'a RunConfig,
    resolved: &'a BTreeMap<String, Resolved>,
    curves: Vec<CurveRecord<'a>>,
    files: &'a [String],
}

pub struct RunInfo<'a> {
    pub config: &'a RunConfig,
    pub plan: &'a Plan,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

/// Writes every table the run produced plus `manifest.json`, returning the
/// file names.
pub fn write_all(dir: &Path, info: &RunInfo<'_>, out: &RunOutput) -> Result<Vec<String>, OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut files = Vec::new();
    if !info.plan.spectra.is_empty() {
        write_results(&dir.join("results.csv"), &out.results)?;
        files.push("results.csv".to_owned());
    }
    if let Some(axis) = info.plan.shift_axis {
        write_shifts(&dir.join("shifts.csv"), axis, &out.shifts)?;
        files.push("shifts.csv".to_owned());
    }
    if let Some(axis) = out.deviation_axis {
        write_deviation(&dir.join("deviation.csv"), axis, &out.deviation)?;
        files.push("deviation.csv".to_owned());
    }
    if !out.two_atom.is_empty() {
        write_two_atom(&dir.join("two_atom.csv"), &out.two_atom)?;
        files.push("two_atom.csv".to_owned());
    }
    files.push("manifest.json".to_owned());
    let manifest = Manifest {
        experiment: info.plan.experiment.name(),
        code_version: env!("CARGO_PKG_VERSION"),
        seed: info.plan.seed,
        threads: info.threads,
        wall_time_seconds: info.wall_time_seconds,
        config: info.config,
        resolved: &info.plan.resolved,
        curves: out.curves.iter().map(CurveRecord::from).collect(),
        files: &files,
    };
    let path = dir.join("manifest.json");
    let file = File::create(&path).map_err(|source| OutputError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest).map_err(|source| OutputError::Json { path, source })?;
    Ok(files)
}
