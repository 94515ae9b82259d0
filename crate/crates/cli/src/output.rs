use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliResult;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Field {
    /// Floats use 17 significant digits, enough to round-trip any double.
    pub fn render(&self) -> String {
        match self {
            Field::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Field::Num(x) => x.to_string(),
            Field::Int(k) => k.to_string(),
            Field::Text(s) => s.clone(),
            Field::Empty => String::new(),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<usize> for Field {
    fn from(k: usize) -> Self {
        Field::Int(k as i64)
    }
}

impl From<Option<f64>> for Field {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Field::Empty, Field::Num)
    }
}

impl From<String> for Field {
    fn from(s: String) -> Self {
        Field::Text(s)
    }
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Appended to the run id; empty for the main table.
    pub suffix: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(suffix: &str, columns: &[&str]) -> Self {
        Self {
            suffix: suffix.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(suffix: &str, columns: Vec<String>) -> Self {
        Self {
            suffix: suffix.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Field::render))?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn file_name(&self, run_id: &str) -> String {
        if self.suffix.is_empty() {
            format!("{run_id}.csv")
        } else {
            format!("{run_id}.{}.csv", self.suffix)
        }
    }
}

/// Everything a command produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
}

#[derive(Serialize)]
struct HashInput<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

/// SHA-256 of the canonical JSON (sorted keys, compact) of command and resolved config.
pub fn config_hash(command: &str, config: &RunConfig) -> CliResult<String> {
    let value = serde_json::to_value(HashInput { command, config })?;
    let digest = Sha256::digest(serde_json::to_string(&value)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn run_id(command: &str, config: &RunConfig, hash: &str) -> String {
    config
        .output
        .run_id
        .clone()
        .unwrap_or_else(|| format!("{command}-{}", &hash[..12]))
}

#[derive(Serialize)]
struct Meta<'a> {
    run_id: &'a str,
    command: &'a str,
    figure: Option<&'a str>,
    program: &'static str,
    version: &'static str,
    config_hash: &'a str,
    config: &'a RunConfig,
    files: Vec<String>,
    summary: &'a Value,
}

/// Writes every table and the metadata sidecar; returns the paths written.
pub fn write_run(dir: &Path, command: &str, config: &RunConfig, output: &RunOutput) -> CliResult<Vec<PathBuf>> {
    let hash = config_hash(command, config)?;
    let id = run_id(command, config, &hash);
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut files = Vec::new();
    for table in &output.tables {
        let name = table.file_name(&id);
        let path = dir.join(&name);
        fs::write(&path, table.to_csv()?)?;
        files.push(name);
        written.push(path);
    }
    let meta = Meta {
        run_id: &id,
        command,
        figure: config.figure.as_deref(),
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: &hash,
        config,
        files,
        summary: &output.summary,
    };
    // round-trip through Value so every object has sorted keys
    let mut text = serde_json::to_string_pretty(&serde_json::to_value(&meta)?)?;
    text.push('\n');
    let path = dir.join(format!("{id}.meta.json"));
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
