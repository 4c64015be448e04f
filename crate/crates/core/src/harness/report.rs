//! Record aggregation and file emission: records/timings/errors CSV, the
//! median summary table, and a gnuplot script for learning curves.
//!
//! The records CSV holds only reproducible values; per-cell wall times go
//! to a separate timings CSV so rerunning a plan reproduces the records
//! byte-for-byte.

use std::io::Write;
use std::path::Path;

use super::{EvalRecord, XyRecord};
use crate::error::Result;

pub const RECORDS_HEADER: &str = "method,dgp,experiment,train_size,seed,mse,mse_percent";
pub const TIMINGS_HEADER: &str = "method,dgp,experiment,train_size,seed,wall_time_s";
pub const ERRORS_HEADER: &str = "method,dgp,experiment,train_size,seed,error";
pub const XY_HEADER: &str = "sim,method,train_size,seed,mse,mse_percent";

fn open(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Writes the deterministic records CSV.
pub fn write_records_csv(records: &[EvalRecord], path: &Path) -> Result<()> {
    let mut f = open(path)?;
    writeln!(f, "{RECORDS_HEADER}")?;
    for r in records {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            r.method, r.dgp, r.experiment, r.train_size, r.seed, r.mse, r.mse_percent
        )?;
    }
    Ok(())
}

/// Writes per-cell wall times (informational; not reproducible).
pub fn write_timings_csv(records: &[EvalRecord], path: &Path) -> Result<()> {
    let mut f = open(path)?;
    writeln!(f, "{TIMINGS_HEADER}")?;
    for r in records {
        writeln!(
            f,
            "{},{},{},{},{},{:.3}",
            r.method, r.dgp, r.experiment, r.train_size, r.seed, r.wall_time_s
        )?;
    }
    Ok(())
}

/// Writes one line per failed cell; empty file when everything passed.
pub fn write_errors_csv(records: &[EvalRecord], path: &Path) -> Result<()> {
    let mut f = open(path)?;
    writeln!(f, "{ERRORS_HEADER}")?;
    for r in records {
        if let Some(err) = &r.error {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                r.method,
                r.dgp,
                r.experiment,
                r.train_size,
                r.seed,
                err.replace(',', ";")
            )?;
        }
    }
    Ok(())
}

pub fn write_xy_csv(records: &[XyRecord], path: &Path) -> Result<()> {
    let mut f = open(path)?;
    writeln!(f, "{XY_HEADER}")?;
    for r in records {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.sim, r.method, r.train_size, r.seed, r.mse, r.mse_percent
        )?;
    }
    Ok(())
}

/// Median of the sorted copy; mean of the middle pair for even counts.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn quartiles(sorted: &[f64]) -> (f64, f64) {
    let at = |q: f64| -> f64 {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    (at(0.25), at(0.75))
}

/// Aggregate of one (dgp, train_size, method) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dgp: String,
    pub train_size: usize,
    pub method: String,
    /// Median MSE over seeds with at least one successful run; NaN otherwise.
    pub median_mse: f64,
    pub iqr: (f64, f64),
    pub n_ok: usize,
    pub n_err: usize,
    /// Minimum median in its (dgp, train_size) column; ties all flagged.
    pub best: bool,
}

/// Per (dgp, size, method) medians over seeds, with the best method(s) per
/// column flagged. Error rows are counted but excluded from the medians.
pub fn summarize(records: &[EvalRecord]) -> Vec<SummaryRow> {
    // Group while preserving first-appearance order.
    let mut keys: Vec<(String, usize, String)> = Vec::new();
    for r in records {
        let key = (r.dgp.clone(), r.train_size, r.method.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut rows: Vec<SummaryRow> = keys
        .into_iter()
        .map(|(dgp, size, method)| {
            let mut ok: Vec<f64> = records
                .iter()
                .filter(|r| {
                    r.dgp == dgp && r.train_size == size && r.method == method && !r.mse.is_nan()
                })
                .map(|r| r.mse)
                .collect();
            let n_err = records
                .iter()
                .filter(|r| {
                    r.dgp == dgp && r.train_size == size && r.method == method && r.mse.is_nan()
                })
                .count();
            let n_ok = ok.len();
            let med = if ok.is_empty() {
                f64::NAN
            } else {
                median(&mut ok)
            };
            let iqr = if ok.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                quartiles(&ok)
            };
            SummaryRow {
                dgp,
                train_size: size,
                method,
                median_mse: med,
                iqr,
                n_ok,
                n_err,
                best: false,
            }
        })
        .collect();

    // Flag the minimum median per (dgp, size); ties all flagged.
    let columns: Vec<(String, usize)> = rows
        .iter()
        .map(|r| (r.dgp.clone(), r.train_size))
        .fold(Vec::new(), |mut acc, key| {
            if !acc.contains(&key) {
                acc.push(key);
            }
            acc
        });
    for (dgp, size) in columns {
        let best = rows
            .iter()
            .filter(|r| r.dgp == dgp && r.train_size == size && !r.median_mse.is_nan())
            .map(|r| r.median_mse)
            .fold(f64::INFINITY, f64::min);
        for r in rows
            .iter_mut()
            .filter(|r| r.dgp == dgp && r.train_size == size)
        {
            r.best = r.median_mse == best && best.is_finite();
        }
    }
    rows
}

/// Renders the summary as a fixed-width text table; best-in-column methods
/// are starred.
pub fn write_summary_text(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut f = open(path)?;
    writeln!(
        f,
        "{:<14} {:>10} {:<22} {:>12} {:>12} {:>12} {:>5} {:>5}",
        "dgp", "train_size", "method", "median_mse", "q25", "q75", "ok", "err"
    )?;
    for r in rows {
        writeln!(
            f,
            "{:<14} {:>10} {:<22} {:>12.6} {:>12.6} {:>12.6} {:>5} {:>5}{}",
            r.dgp,
            r.train_size,
            r.method,
            r.median_mse,
            r.iqr.0,
            r.iqr.1,
            r.n_ok,
            r.n_err,
            if r.best { "  *" } else { "" }
        )?;
    }
    Ok(())
}

/// Emits a self-contained gnuplot script plotting median MSE learning
/// curves per method from the summary table.
pub fn write_gnuplot_script(
    rows: &[SummaryRow],
    records_csv_name: &str,
    path: &Path,
) -> Result<()> {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut f = open(path)?;
    writeln!(f, "# Learning curves: median CATE MSE vs training size.")?;
    writeln!(f, "# Data: {records_csv_name} (per-seed records).")?;
    writeln!(f, "set datafile separator ','")?;
    writeln!(f, "set logscale xy")?;
    writeln!(f, "set xlabel 'training size'")?;
    writeln!(f, "set ylabel 'CATE MSE'")?;
    writeln!(f, "set key outside right")?;
    writeln!(f, "set terminal svg size 900,600")?;
    writeln!(f, "set output 'learning_curves.svg'")?;
    writeln!(f, "$medians << EOD")?;
    for r in rows {
        if !r.median_mse.is_nan() {
            writeln!(f, "{},{},{}", r.method, r.train_size, r.median_mse)?;
        }
    }
    writeln!(f, "EOD")?;
    let plots: Vec<String> = methods
        .iter()
        .map(|m| {
            format!(
                "$medians using (strcol(1) eq '{m}' ? $2 : NaN):3 with linespoints title '{m}'"
            )
        })
        .collect();
    writeln!(f, "plot {}", plots.join(", \\\n     "))?;
    Ok(())
}
