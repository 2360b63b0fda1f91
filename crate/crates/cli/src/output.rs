//! Result tables, plot series and the run manifest.
//!
//! Tables are tab-separated with a typed header row (`name:type`, type one of
//! `int`, `f64`, `str`, `bool`). Floats are written in shortest round-trip
//! form, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub enum Cell {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
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

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl Cell {
    fn kind(&self) -> &'static str {
        match self {
            Cell::Int(_) => "int",
            Cell::Float(_) => "f64",
            Cell::Str(_) => "str",
            Cell::Bool(_) => "bool",
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:e}"),
            Cell::Str(v) => v.replace(['\t', '\n'], " "),
            Cell::Bool(v) => v.to_string(),
        }
    }
}

pub struct Table {
    columns: Vec<String>,
    kinds: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), kinds: Vec::new(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        if self.kinds.is_empty() {
            self.kinds = row.iter().map(Cell::kind).collect();
        } else {
            debug_assert!(row.iter().zip(&self.kinds).all(|(c, k)| c.kind() == *k));
        }
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c}:{}", self.kinds.get(i).copied().unwrap_or("str")))
            .collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: &'a RunConfig,
    threads: usize,
    started_unix: u64,
    finished_unix: u64,
    files: Vec<FileDigest>,
}

/// Single writer for one run directory.
pub struct RunWriter {
    root: PathBuf,
    files: Vec<PathBuf>,
    started: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunWriter {
    pub fn create(root: &Path) -> anyhow::Result<RunWriter> {
        std::fs::create_dir_all(root.join("series")).with_context(|| format!("creating {}", root.display()))?;
        Ok(RunWriter { root: root.to_path_buf(), files: Vec::new(), started: unix_now() })
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.root.join(rel);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(PathBuf::from(rel));
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &Table) -> anyhow::Result<()> {
        self.write_bytes(&format!("{name}.tsv"), table.render().as_bytes())
    }

    /// Plot-ready series under `series/`.
    pub fn series(&mut self, name: &str, table: &Table) -> anyhow::Result<()> {
        self.write_bytes(&format!("series/{name}.tsv"), table.render().as_bytes())
    }

    pub fn finish(self, subcommand: &str, config: &RunConfig) -> anyhow::Result<()> {
        let mut files = Vec::new();
        for rel in &self.files {
            let bytes = std::fs::read(self.root.join(rel))?;
            files.push(FileDigest { path: rel.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        }
        let manifest = Manifest {
            tool: "cylfield",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            config,
            threads: rayon::current_num_threads(),
            started_unix: self.started,
            finished_unix: unix_now(),
            files,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.root.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}
