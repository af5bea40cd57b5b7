//! File formats: CSV ingestion with cell-level error coordinates, JSON and
//! CSV emitters for rate tables and real-data reports, the Fig.-2-shaped
//! plot-data CSV, and the run MANIFEST.

use std::fs;
use std::path::Path;

use serde::Serialize;

use robsel_core::{Dataset, Matrix};

use crate::error::{AppError, Result};
use crate::realdata::RealDataReport;
use crate::sim::RateTable;

/// A numeric table read from CSV: header names plus a dense row-major
/// matrix.
#[derive(Debug, Clone)]
pub struct NumericTable {
    pub headers: Vec<String>,
    pub values: Matrix,
}

pub fn read_numeric_csv(path: &Path) -> Result<NumericTable> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| AppError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| AppError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(AppError::Csv {
            path: path.to_path_buf(),
            message: "empty header row".into(),
        });
    }
    let mut data = Vec::new();
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| AppError::Csv {
            path: path.to_path_buf(),
            message: format!("row {}: {e}", i + 2),
        })?;
        if record.len() != headers.len() {
            return Err(AppError::Csv {
                path: path.to_path_buf(),
                message: format!(
                    "row {}: {} fields, expected {}",
                    i + 2,
                    record.len(),
                    headers.len()
                ),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| AppError::Csv {
                path: path.to_path_buf(),
                message: format!(
                    "row {}, column '{}': non-numeric cell '{}'",
                    i + 2,
                    headers[j],
                    cell
                ),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(AppError::Csv {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    let cols = headers.len();
    let values = Matrix::from_vec(rows, cols, data)
        .map_err(|e| AppError::Validation(e.to_string()))?;
    Ok(NumericTable { headers, values })
}

impl NumericTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| {
                AppError::Validation(format!(
                    "column '{name}' not found; available: {}",
                    self.headers.join(", ")
                ))
            })
    }

    /// Split into a response vector and the predictor matrix.
    pub fn split_response(&self, response: &str) -> Result<(Vec<f64>, Matrix, Vec<String>)> {
        let ridx = self.column_index(response)?;
        let n = self.values.rows();
        let p = self.values.cols() - 1;
        if p == 0 {
            return Err(AppError::Validation(
                "table needs at least one predictor column".into(),
            ));
        }
        let mut y = Vec::with_capacity(n);
        let mut xd = Vec::with_capacity(n * p);
        let mut names = Vec::with_capacity(p);
        for (j, h) in self.headers.iter().enumerate() {
            if j != ridx {
                names.push(h.clone());
            }
        }
        for i in 0..n {
            for j in 0..self.values.cols() {
                if j == ridx {
                    y.push(self.values.get(i, j));
                } else {
                    xd.push(self.values.get(i, j));
                }
            }
        }
        let x = Matrix::from_vec(n, p, xd).map_err(|e| AppError::Validation(e.to_string()))?;
        Ok((y, x, names))
    }

    pub fn to_dataset(&self, response: &str) -> Result<Dataset> {
        let (y, x, _) = self.split_response(response)?;
        Dataset::new(x, y).map_err(|e| AppError::Validation(e.to_string()))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Numerical(format!("serialization: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| AppError::io(path, e))
}

pub fn write_rate_table_csv(path: &Path, table: &RateTable) -> Result<()> {
    let mut out = String::from("criterion,alpha,r,um,tm,om,nc_count,excluded\n");
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{:.1},{:.1},{:.1},{},{}\n",
            row.criterion, row.alpha, row.r, row.um, row.tm, row.om, row.nc_count, row.excluded
        ));
    }
    fs::write(path, out).map_err(|e| AppError::io(path, e))
}

/// Plot-ready CSV with one TM-rate point per (alpha, criterion, r).
pub fn write_plot_data_csv(path: &Path, table: &RateTable) -> Result<()> {
    let mut out = String::from("alpha,criterion,r,TM_rate\n");
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{:.1}\n",
            row.alpha, row.criterion, row.r, row.tm
        ));
    }
    fs::write(path, out).map_err(|e| AppError::io(path, e))
}

pub fn write_realdata_csv(path: &Path, report: &RealDataReport) -> Result<()> {
    let mut out = String::from(
        "criterion,alpha,rmse_mean,rmse_sd,nu_mean,nu_sd,nu_raw_mean,nu_raw_sd,cr_mean,cr_sd,failed_reps\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.2},{:.2},{:.2},{:.2},{:.4},{:.4},{}\n",
            row.criterion,
            row.alpha,
            row.rmse_mean,
            row.rmse_sd,
            row.nu_mean,
            row.nu_sd,
            row.nu_raw_mean,
            row.nu_raw_sd,
            row.cr_mean,
            row.cr_sd,
            row.failed_reps
        ));
    }
    fs::write(path, out).map_err(|e| AppError::io(path, e))
}

/// Run manifest listing the emitted files and whether the run finished.
pub fn write_manifest(dir: &Path, files: &[&str], complete: bool, note: Option<&str>) -> Result<()> {
    let path = dir.join("MANIFEST");
    let mut out = String::new();
    out.push_str(&format!(
        "status: {}\n",
        if complete { "complete" } else { "incomplete" }
    ));
    if let Some(n) = note {
        out.push_str(&format!("note: {n}\n"));
    }
    for f in files {
        out.push_str(&format!("file: {f}\n"));
    }
    fs::write(&path, out).map_err(|e| AppError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_numeric_table() {
        let f = temp_csv("y,x1,x2\n1.0,2.0,3.0\n4.0,5.0,6.0\n");
        let t = read_numeric_csv(f.path()).unwrap();
        assert_eq!(t.headers, vec!["y", "x1", "x2"]);
        assert_eq!(t.values.rows(), 2);
        let (y, x, names) = t.split_response("y").unwrap();
        assert_eq!(y, vec![1.0, 4.0]);
        assert_eq!(x.get(1, 0), 5.0);
        assert_eq!(names, vec!["x1", "x2"]);
    }

    #[test]
    fn reports_cell_coordinates_on_bad_input() {
        let f = temp_csv("y,x1\n1.0,2.0\n3.0,oops\n");
        let err = read_numeric_csv(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3"), "{msg}");
        assert!(msg.contains("x1"), "{msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn missing_column_is_a_validation_error() {
        let f = temp_csv("y,x1\n1.0,2.0\n");
        let t = read_numeric_csv(f.path()).unwrap();
        let err = t.split_response("nope").unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
