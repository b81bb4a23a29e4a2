//! CSV/JSON writers with a fixed number format, and the run manifest.

use crate::config::RunConfig;
use crate::error::CliError;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_float(*v),
        Cell::Text(s) => s.clone(),
    }
}

pub fn csv_text(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(render).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

/// Writes files into one output directory and remembers their names in write order.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn put(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
        self.put(name, &csv_text(header, rows))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.put(name, &text)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    vpatch_version: &'static str,
    files: &'a [String],
    /// not reproducible; excluded from byte comparisons of reruns
    wall_time_seconds: f64,
}

pub fn write_manifest(art: &mut Artifacts, config: &RunConfig, wall: f64) -> Result<(), CliError> {
    let files = art.files().to_vec();
    let manifest = Manifest {
        command: config.command.name(),
        config,
        vpatch_version: env!("CARGO_PKG_VERSION"),
        files: &files,
        wall_time_seconds: wall,
    };
    art.json("manifest.json", &manifest)
}
