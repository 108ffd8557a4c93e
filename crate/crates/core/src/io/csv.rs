//! Diagnostics time series as CSV.

use std::path::Path;

use crate::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Header line plus one record per row; only the header for no rows.
pub fn render_csv(rows: &[DiagnosticsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DiagnosticsRow::HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn write_csv(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    std::fs::write(path, render_csv(rows)?)?;
    Ok(())
}

/// Parses a file written by [`write_csv`] back into rows.
pub fn read_csv(text: &str) -> Result<Vec<DiagnosticsRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(DiagnosticsRow::HEADER) {
        return Err(Error::Io(std::io::Error::other(format!("unexpected header {header:?}"))));
    }
    let bad = |i: usize, k: usize| Error::Io(std::io::Error::other(format!("row {i}: bad field {}", DiagnosticsRow::HEADER[k])));
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let f = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(i, k));
        let u = |k: usize| rec[k].parse::<usize>().map_err(|_| bad(i, k));
        rows.push(DiagnosticsRow {
            step: u(0)?,
            t: f(1)?,
            dt: f(2)?,
            mass: f(3)?,
            lyapunov: f(4)?,
            scheme_energy: f(5)?,
            dissipation_increment: f(6)?,
            perimeter: f(7)?,
            domain_count: u(8)?,
            max_abs_c: f(9)?,
            rms_normal_velocity: f(10)?,
            ch_iterations: u(11)?,
            ns_iterations: u(12)?,
        });
    }
    Ok(rows)
}
