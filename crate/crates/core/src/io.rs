//! CSV and plot-script output.
//!
//! Every file is written to a sibling temporary file first and then renamed
//! into place, so a failed run never leaves a truncated file behind.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::config::fmt_f64;
use crate::error::{Error, Result};
use crate::optimizer::IterationRecord;

pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const CONVERGENCE_HEADER: &str = "iteration,sup_norm_gradJ,cost_J";

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(contents.as_bytes())?;
            f.sync_all()
        })
        .and_then(|()| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// CSV text with a one-line header and numeric columns.
pub fn csv<'a>(header: &[&str], rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Builds CSV text from equally long columns.
pub fn csv_columns(header: &[&str], columns: &[&[f64]]) -> Result<String> {
    let len = columns.first().map_or(0, |c| c.len());
    if header.len() != columns.len() || columns.iter().any(|c| c.len() != len) {
        return Err(Error::Shape(format!(
            "{} headers for {} columns of unequal or mismatched length",
            header.len(),
            columns.len()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..len)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Ok(csv(header, rows.iter().map(Vec::as_slice)))
}

pub fn convergence_csv(records: &[IterationRecord]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{},{}\n",
            r.iteration,
            fmt_f64(r.sup_norm),
            fmt_f64(r.cost)
        ));
    }
    s
}

/// One parsed line of `convergence.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub iteration: usize,
    pub sup_norm: f64,
    pub cost: f64,
}

pub fn parse_convergence(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CONVERGENCE_HEADER => {}
        other => {
            return Err(Error::Shape(format!(
                "convergence header is {:?}, expected '{CONVERGENCE_HEADER}'",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            let bad = || Error::Shape(format!("convergence line {}: '{line}'", k + 2));
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 3 {
                return Err(bad());
            }
            Ok(ConvergenceRow {
                iteration: fields[0].parse().map_err(|_| bad())?,
                sup_norm: fields[1].parse().map_err(|_| bad())?,
                cost: fields[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn read_convergence(dir: &Path) -> Result<Vec<ConvergenceRow>> {
    let path = dir.join(CONVERGENCE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_convergence(&text)
}

/// Gnuplot script drawing the sup-norm of ∇J against the iteration count.
pub fn convergence_script(title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title '{title}'\n\
         set xlabel 'iteration'\n\
         set ylabel 'sup |grad J|'\n\
         set logscale y\n\
         plot '{CONVERGENCE_FILE}' using 1:2 with linespoints\n"
    )
}

/// Gnuplot script with one panel per snapshot file, reconstructed against true bottom.
pub fn snapshot_script(files: &[String]) -> String {
    let mut s = String::from(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'x'\n\
         set ylabel 'b'\n",
    );
    for f in files {
        s.push_str(&format!(
            "set title '{f}'\nplot '{f}' using 1:2 with lines, '{f}' using 1:3 with lines dashtype 2\npause -1\n"
        ));
    }
    s
}
