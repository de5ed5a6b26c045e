//! CSV ingestion and emission.
//!
//! Files carry a leading time column followed by one or two value columns.
//! A first row that does not parse as numbers is taken as the header.

use std::fmt::Write as _;
use std::path::Path;

use plcc::TimeSeries;

use crate::error::{CliError, CliResult};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders `t,x[,y]` rows with LF line endings.
pub fn render_series(x: &[f64], y: Option<&[f64]>) -> String {
    let mut out = String::with_capacity(x.len() * 52);
    out.push_str(if y.is_some() { "t,x,y\n" } else { "t,x\n" });
    for (t, xv) in x.iter().enumerate() {
        write!(out, "{t},{}", format_value(*xv)).unwrap();
        if let Some(y) = y {
            write!(out, ",{}", format_value(y[t])).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Value columns of a CSV file (the time column is dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn series(&self, i: usize) -> CliResult<TimeSeries> {
        let s = TimeSeries::new(self.columns[i].clone())?;
        Ok(match &self.header {
            Some(h) => s.with_label(h[i + 1].clone()),
            None => s,
        })
    }
}

pub fn parse_csv(bytes: &[u8], source: &str) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut header = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{source}: {e}")))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.len() < 2 {
            return Err(CliError::Usage(format!(
                "{source}: line {line}: expected a time column and at least one value column"
            )));
        }
        let parsed: Result<Vec<f64>, usize> = rec
            .iter()
            .enumerate()
            .map(|(j, f)| f.parse::<f64>().map_err(|_| j))
            .collect();
        match parsed {
            Err(_) if i == 0 => {
                header = Some(rec.iter().map(str::to_string).collect());
                columns = vec![Vec::new(); rec.len() - 1];
            }
            Err(j) => {
                return Err(CliError::Usage(format!(
                    "{source}: line {line}, column {}: '{}' is not a number",
                    j + 1,
                    &rec[j]
                )))
            }
            Ok(values) => {
                if columns.is_empty() {
                    columns = vec![Vec::new(); values.len() - 1];
                }
                for (col, v) in columns.iter_mut().zip(&values[1..]) {
                    if !v.is_finite() {
                        return Err(CliError::Usage(format!(
                            "{source}: line {line}: non-finite value {v}"
                        )));
                    }
                    col.push(*v);
                }
            }
        }
    }
    if columns.is_empty() || columns[0].is_empty() {
        return Err(CliError::Usage(format!("{source}: no data rows")));
    }
    Ok(Table { header, columns })
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
