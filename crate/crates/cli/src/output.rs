//! CSV emission with `#` provenance lines.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

/// A cell of an output row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    /// Starts a document with the standard provenance block.
    pub fn with_provenance(command: &str, config_json: &str, seed: u64) -> Self {
        let mut csv = Csv::default();
        csv.meta("tool", &format!("ris-coverage {}", env!("CARGO_PKG_VERSION")));
        csv.meta("command", command);
        csv.meta("config_sha256", &sha256_hex(config_json.as_bytes()));
        csv.meta("seed", &seed.to_string());
        csv
    }

    pub fn meta(&mut self, key: &str, value: &str) {
        debug_assert_eq!(self.columns, 0, "metadata must precede the header");
        let _ = writeln!(self.text, "# {key}: {value}");
    }

    pub fn header(&mut self, columns: &[&str]) {
        self.columns = columns.len();
        self.text.push_str(&columns.join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width");
        let rendered: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Num(v) => format_f64(v),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s,
                Cell::Empty => String::new(),
            })
            .collect();
        self.text.push_str(&rendered.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Writes to `path`, or stdout when `None`.
    pub fn emit(&self, path: Option<&Path>) -> Result<(), CliError> {
        match path {
            Some(p) => std::fs::write(p, &self.text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
            None => {
                use std::io::Write;
                std::io::stdout()
                    .write_all(self.text.as_bytes())
                    .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
            }
        }
    }
}
