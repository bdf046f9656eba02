//! Tables rendered as CSV or JSON lines, and the manifest written next to
//! every output file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cli::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
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

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(u64::from(v))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Shortest round-trip decimal; exponent form for very small or large values.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(fmt_float(*v)),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Json => {
                // built by hand to keep column order
                for row in &self.rows {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("{}:{}", json!(c), v.json()))
                        .collect();
                    out.push('{');
                    out.push_str(&fields.join(","));
                    out.push_str("}\n");
                }
            }
            Format::Csv | Format::Text => {
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
            }
        }
        out
    }
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
}

/// Provenance of one output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u32>,
    pub version: &'static str,
    outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn new(command: &str, source: String, config_sha256: Option<String>) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            source,
            config_sha256,
            seed: None,
            trials: None,
            version: env!("CARGO_PKG_VERSION"),
            outputs: Vec::new(),
        }
    }

    pub fn with_run(mut self, seed: u64, trials: u32) -> Self {
        self.seed = Some(seed);
        self.trials = Some(trials);
        self
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

/// Writes `body` to `out` (and its manifest) or to stdout.
pub fn emit(body: &str, out: Option<&Path>, mut manifest: RunManifest) -> Result<(), CliError> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(CliError::runtime)?;
            stdout.flush().map_err(CliError::runtime)?;
        }
        Some(path) => {
            fs::write(path, body).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
            manifest.outputs.push(OutputEntry {
                path: path.display().to_string(),
                sha256: sha256_hex(body.as_bytes()),
            });
            let line = serde_json::to_string(&manifest).map_err(CliError::runtime)? + "\n";
            let mpath = manifest_path(path);
            fs::write(&mpath, line).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", mpath.display())))?;
        }
    }
    Ok(())
}
