//! Output plumbing shared by every command: CSV writers, the machine-
//! readable error envelope, and JSON serialization. Everything written here
//! is a pure function of the inputs — no timestamps, hostnames, or
//! locale-dependent formatting — so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Floats are written with the shortest representation that parses back to
/// the identical bit pattern (full round-trip precision). Non-finite values
/// appear as `NaN` / `inf` / `-inf` in CSV and as `null` in JSON.
pub fn fmt_f64(value: f64) -> String {
    let mut s = String::new();
    write!(s, "{value}").expect("writing a float to a string cannot fail");
    s
}

/// One CSV cell.
pub enum Cell {
    F(f64),
    U(usize),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}

/// Streaming CSV writer with a fixed header; commas and newlines only, no
/// quoting (all cells are numeric).
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let file = File::create(&path)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(","))
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(CsvWriter { out, columns: header.len(), path })
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<(), CliError> {
        debug_assert_eq!(cells.len(), self.columns, "row width must match the header");
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            match cell {
                Cell::F(v) => line.push_str(&fmt_f64(*v)),
                Cell::U(v) => {
                    write!(line, "{v}").expect("writing an integer to a string cannot fail")
                }
            }
        }
        writeln!(self.out, "{line}")
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", self.path.display())))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out
            .flush()
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", self.path.display())))
    }
}

/// Write a pretty-printed JSON report.
pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<(), CliError> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("cannot serialize {name}: {e}")))?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// The error envelope printed to stderr: one JSON line that scripts can
/// parse without scraping human prose.
#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    exit: i32,
    message: String,
}

pub fn error_json(err: &CliError) -> String {
    let envelope = ErrorEnvelope {
        error: ErrorBody { kind: err.kind(), exit: err.exit_code(), message: err.message() },
    };
    serde_json::to_string(&envelope)
        .unwrap_or_else(|_| r#"{"error":{"kind":"internal","exit":4,"message":"unprintable"}}"#.into())
}
