//! Point-by-point comparison of two output tables.
//!
//! Rows are matched by their grid: the `curve` column and the first
//! parameter column after it. Every other column is compared numerically.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::output::{OutputError, Table};

/// Value columns paired with the standard error used for χ².
const ERROR_PAIRS: [(&str, &str); 2] = [("mean_T", "stderr_T"), ("shift_over_gamma_t", "uncertainty")];

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    Read(#[from] OutputError),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnReport {
    pub column: String,
    pub max_abs_diff: f64,
    pub bitwise_identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    pub column: String,
    pub statistic: f64,
    /// Points with a positive combined standard error.
    pub terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub curve: Option<String>,
    pub grid: f64,
    /// `b − a` per compared column.
    pub diffs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub file_a: String,
    pub file_b: String,
    pub grid_column: String,
    pub n_points: usize,
    pub bitwise_identical: bool,
    pub columns: Vec<ColumnReport>,
    pub chi_square: Vec<ChiSquare>,
    /// Per-curve χ² of `mean_T` against `mft_T` within each file.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub mft_chi_square_a: BTreeMap<String, ChiSquare>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub mft_chi_square_b: BTreeMap<String, ChiSquare>,
    pub points: Vec<PointReport>,
}

fn difference(a: f64, b: f64) -> f64 {
    if a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()) {
        0.0
    } else {
        b - a
    }
}

fn layout(t: &Table) -> Result<(Option<usize>, usize), CompareError> {
    let curve = t.column_index("curve");
    let grid = match curve {
        Some(0) => 1,
        Some(_) => return Err(CompareError::GridMismatch(format!("{}: `curve` must be the first column", t.path.display()))),
        None => 0,
    };
    if t.headers.len() <= grid {
        return Err(CompareError::GridMismatch(format!("{}: no grid column", t.path.display())));
    }
    Ok((curve, grid))
}

/// χ² of `mean_T` against `mft_T` for each curve of a results table.
pub fn mft_chi_square(t: &Table) -> Result<BTreeMap<String, ChiSquare>, CompareError> {
    let (Some(mean), Some(se), Some(mft), Some(curve)) = (
        t.column_index("mean_T"),
        t.column_index("stderr_T"),
        t.column_index("mft_T"),
        t.column_index("curve"),
    ) else {
        return Ok(BTreeMap::new());
    };
    let mut out: BTreeMap<String, ChiSquare> = BTreeMap::new();
    for i in 0..t.rows.len() {
        let entry = out.entry(t.rows[i][curve].clone()).or_insert_with(|| ChiSquare {
            column: "mean_T-mft_T".to_owned(),
            statistic: 0.0,
            terms: 0,
        });
        let s = t.float(i, se)?;
        if s > 0.0 {
            entry.statistic += ((t.float(i, mean)? - t.float(i, mft)?) / s).powi(2);
            entry.terms += 1;
        }
    }
    Ok(out)
}

pub fn compare_tables(a: &Table, b: &Table) -> Result<Report, CompareError> {
    if a.headers != b.headers {
        return Err(CompareError::GridMismatch(format!(
            "headers differ: [{}] vs [{}]",
            a.headers.join(","),
            b.headers.join(",")
        )));
    }
    if a.rows.len() != b.rows.len() {
        return Err(CompareError::GridMismatch(format!("{} rows vs {} rows", a.rows.len(), b.rows.len())));
    }
    let (curve, grid) = layout(a)?;
    let value_cols: Vec<usize> = (grid + 1..a.headers.len()).collect();

    let mut points = Vec::with_capacity(a.rows.len());
    let mut max_diff = vec![0.0f64; value_cols.len()];
    let mut identical_cols = vec![true; value_cols.len()];
    for i in 0..a.rows.len() {
        if let Some(c) = curve {
            if a.rows[i][c] != b.rows[i][c] {
                return Err(CompareError::GridMismatch(format!(
                    "row {}: curve `{}` vs `{}`",
                    i + 1,
                    a.rows[i][c],
                    b.rows[i][c]
                )));
            }
        }
        let (ga, gb) = (a.float(i, grid)?, b.float(i, grid)?);
        if ga.to_bits() != gb.to_bits() {
            return Err(CompareError::GridMismatch(format!(
                "row {}: {} = {ga} vs {gb}",
                i + 1,
                a.headers[grid]
            )));
        }
        let mut diffs = BTreeMap::new();
        for (j, &col) in value_cols.iter().enumerate() {
            identical_cols[j] &= a.rows[i][col] == b.rows[i][col];
            let d = difference(a.float(i, col)?, b.float(i, col)?);
            max_diff[j] = if d.is_nan() { f64::NAN } else { max_diff[j].max(d.abs()) };
            diffs.insert(a.headers[col].clone(), d);
        }
        points.push(PointReport {
            curve: curve.map(|c| a.rows[i][c].clone()),
            grid: ga,
            diffs,
        });
    }

    let mut chi_square = Vec::new();
    for (value, error) in ERROR_PAIRS {
        if let (Some(v), Some(e)) = (a.column_index(value), a.column_index(error)) {
            let mut stat = ChiSquare {
                column: value.to_owned(),
                statistic: 0.0,
                terms: 0,
            };
            for i in 0..a.rows.len() {
                let var = a.float(i, e)?.powi(2) + b.float(i, e)?.powi(2);
                if var > 0.0 {
                    stat.statistic += difference(a.float(i, v)?, b.float(i, v)?).powi(2) / var;
                    stat.terms += 1;
                }
            }
            chi_square.push(stat);
        }
    }

    Ok(Report {
        file_a: a.path.display().to_string(),
        file_b: b.path.display().to_string(),
        grid_column: a.headers[grid].clone(),
        n_points: a.rows.len(),
        bitwise_identical: identical_cols.iter().all(|&x| x),
        columns: value_cols
            .iter()
            .zip(max_diff.iter().zip(&identical_cols))
            .map(|(&col, (&m, &same))| ColumnReport {
                column: a.headers[col].clone(),
                max_abs_diff: m,
                bitwise_identical: same,
            })
            .collect(),
        chi_square,
        mft_chi_square_a: mft_chi_square(a)?,
        mft_chi_square_b: mft_chi_square(b)?,
        points,
    })
}

pub fn compare_files(a: &Path, b: &Path) -> Result<Report, CompareError> {
    compare_tables(&Table::read(a)?, &Table::read(b)?)
}
