//! Deterministic tabular output: CSV, JSON and JSON lines.
//!
//! Floats are written with 17 significant digits in scientific notation, so
//! every `f64` round-trips exactly and no locale can change the text.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::OutputPath;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// `{:.16e}` for finite values; `NaN`, `inf`, `-inf` otherwise.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Keeps only `wanted`, in that order. Unknown or repeated names are errors.
    pub fn select(self, wanted: &[String]) -> Result<Table, CliError> {
        let mut idx = Vec::with_capacity(wanted.len());
        for name in wanted {
            let i = self.columns.iter().position(|c| c == name).ok_or_else(|| {
                CliError::config(format!("unknown column `{name}` (available: {})", self.columns.join(", ")))
            })?;
            if idx.contains(&i) {
                return Err(CliError::config(format!("column `{name}` listed twice")));
            }
            idx.push(i);
        }
        let rows = self.rows.into_iter().map(|row| idx.iter().map(|&i| row[i].clone()).collect()).collect();
        Ok(Table { columns: wanted.to_vec(), rows })
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(x) => format_number(*x),
                Cell::Text(s) => s.clone(),
                Cell::Bool(b) => b.to_string(),
            }))
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    fn json_object(&self, row: &[Cell]) -> String {
        let mut s = String::from("{");
        for (i, (name, cell)) in self.columns.iter().zip(row).enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}:{}", json_string(name), json_cell(cell));
        }
        s.push('}');
        s
    }

    /// `{"meta": …, "rows": [{column: value, …}, …]}` with one row per line.
    pub fn to_json(&self, meta: &impl Serialize) -> Result<Vec<u8>, CliError> {
        let mut s = String::new();
        let _ = write!(s, "{{\"meta\":{},\"rows\":[", serde_json::to_string(meta)?);
        for (i, row) in self.rows.iter().enumerate() {
            s.push_str(if i == 0 { "\n" } else { ",\n" });
            s.push_str(&self.json_object(row));
        }
        s.push_str("\n]}\n");
        Ok(s.into_bytes())
    }

    /// One JSON object per row.
    pub fn to_json_lines(&self) -> Vec<u8> {
        let mut s = String::new();
        for row in &self.rows {
            s.push_str(&self.json_object(row));
            s.push('\n');
        }
        s.into_bytes()
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_cell(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
        Cell::Num(_) => "null".to_string(),
        Cell::Text(s) => json_string(s),
        Cell::Bool(b) => b.to_string(),
    }
}

/// Writes `bytes` to a file through a temporary sibling and an atomic rename,
/// or to standard output.
pub fn emit(path: &OutputPath, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        OutputPath::Stdout => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
        OutputPath::File(p) => write_atomic(p, bytes)?,
    }
    Ok(())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
