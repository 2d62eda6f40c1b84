//! Column extraction into small per-figure CSV files for external plotting.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sim::LogTable;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// Pull the named numeric columns out of a log.
pub fn extract_plot_series(table: &LogTable, columns: &[&str]) -> Result<Vec<Series>> {
    columns
        .iter()
        .map(|c| Ok(Series { name: c.to_string(), values: table.column(c)? }))
        .collect()
}

/// Columns of each standard figure.
pub const FIGURES: [(&str, &[&str]); 4] = [
    ("position", &["t", "ee_z", "ee_zd"]),
    ("force", &["t", "f_ext_z", "f_contact_z"]),
    ("tank", &["t", "E_tank", "P_task"]),
    ("energy", &["t", "E_total", "T_total", "U_total", "lambda"]),
];

pub fn series_to_csv(series: &[Series]) -> String {
    let mut out = series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    let rows = series.first().map_or(0, |s| s.values.len());
    for i in 0..rows {
        let row: Vec<String> = series.iter().map(|s| format!("{:.8e}", s.values[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Write `fig_<name>.csv` for every standard figure into `dir`. With
/// `z_wb`, the position figure gains a constant workbench column.
pub fn write_figure_series(table: &LogTable, z_wb: Option<f64>, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, cols) in FIGURES {
        let mut series = extract_plot_series(table, cols)?;
        if name == "position" {
            if let Some(z) = z_wb {
                series.push(Series { name: "z_wb".into(), values: vec![z; table.rows.len()] });
            }
        }
        let path = dir.join(format!("fig_{name}.csv"));
        fs::write(&path, series_to_csv(&series)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
