//! CSV and text report writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use etpd_core::metrics::{SeriesRow, SERIES_COLUMNS};

use crate::error::CliResult;

/// Seventeen significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Cells of one series row in column order. Loss and violation columns are
/// empty when the run kept no decisions.
pub fn series_cells(row: &SeriesRow, with_metrics: bool) -> Vec<String> {
    let metric = |v: f64| if with_metrics { fmt_float(v) } else { String::new() };
    vec![
        row.t.to_string(),
        metric(row.avg_cum_loss),
        metric(row.avg_cum_violation),
        row.cum_triggers.to_string(),
        fmt_opt(row.net_regret_dynamic),
        fmt_opt(row.net_regret_static),
    ]
}

fn write_with_meta(path: &Path, meta: &[String], header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut file = fs::File::create(path)?;
    for line in meta {
        writeln!(file, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series(path: &Path, meta: &[String], rows: &[SeriesRow], with_metrics: bool) -> CliResult<()> {
    write_with_meta(path, meta, &SERIES_COLUMNS, rows.iter().map(|r| series_cells(r, with_metrics)))
}

/// One sweep cell: its key and its series.
pub struct SweepCell<'a> {
    pub tau0: Option<f64>,
    pub seed: u64,
    pub rows: &'a [SeriesRow],
    pub with_metrics: bool,
}

/// Long format keyed by `(tau0, seed, t)`.
pub fn write_sweep(path: &Path, meta: &[String], cells: &[SweepCell<'_>]) -> CliResult<()> {
    let mut header = vec!["tau0", "seed"];
    header.extend(SERIES_COLUMNS);
    let rows = cells.iter().flat_map(|c| {
        c.rows.iter().map(move |r| {
            let mut cells = vec![fmt_opt(c.tau0), c.seed.to_string()];
            cells.extend(series_cells(r, c.with_metrics));
            cells
        })
    });
    write_with_meta(path, meta, &header, rows)
}

/// Final row of every cell.
pub fn write_sweep_summary(path: &Path, meta: &[String], cells: &[SweepCell<'_>]) -> CliResult<()> {
    let header = [
        "tau0",
        "seed",
        "t",
        "avg_cum_loss",
        "avg_cum_violation",
        "total_triggers",
        "net_regret_dynamic",
        "net_regret_static",
    ];
    let rows = cells.iter().filter_map(|c| {
        c.rows.last().map(|r| {
            let mut cells = vec![fmt_opt(c.tau0), c.seed.to_string()];
            cells.extend(series_cells(r, c.with_metrics));
            cells
        })
    });
    write_with_meta(path, meta, &header, rows)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}
