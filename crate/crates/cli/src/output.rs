//! CSV and manifest writing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Empty cell for a missing value.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// In-memory CSV table with a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    text: String,
    rows: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            rows: 0,
        }
    }

    pub fn push(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
        self.rows += 1;
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Output file listed in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes a table into `dir` and returns its manifest entry.
pub fn write_table(dir: &Path, name: &str, table: &Table) -> CliResult<OutputRecord> {
    let path: PathBuf = dir.join(name);
    write_bytes(&path, table.as_str().as_bytes())?;
    Ok(OutputRecord {
        file: name.to_string(),
        rows: table.rows(),
        sha256: sha256_hex(table.as_str().as_bytes()),
    })
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance of one CLI run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub command: String,
    pub library_version: &'static str,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
    pub bundle: serde_json::Value,
    /// How intervals are computed. These are choices of this tool.
    pub ci_method: &'static str,
    pub runtime_seconds: f64,
    pub summaries: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
}

pub const CI_METHOD: &str = "95% Wilson score intervals on empirical probabilities; \
     false-alarm gains carry first-order propagated intervals combining the binomial \
     error with the threshold-calibration error (tool choice, not a published protocol)";

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_bytes(&path, text.as_bytes())?;
    Ok(path)
}
