//! Provenance-stamped artifacts written atomically.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use hardy_core::config::ExperimentConfig;
use hardy_core::{HardyError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("hardy ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    Csv,
    Json,
    Both,
}

impl Emit {
    pub fn json(self) -> bool {
        matches!(self, Emit::Json | Emit::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Emit::Csv | Emit::Both)
    }
}

/// SHA-256 of the compact JSON form of the configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let text = serde_json::to_string(cfg).expect("configuration serializes");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    config_hash: &'a str,
    command: &'a str,
    config: &'a ExperimentConfig,
    result: &'a T,
}

/// Writes into `dir` through a temporary file and a rename.
pub struct Writer<'a> {
    pub dir: PathBuf,
    pub emit: Emit,
    pub config: &'a ExperimentConfig,
    pub hash: String,
    pub written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(dir: &Path, emit: Emit, config: &'a ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer { dir: dir.to_path_buf(), emit, config, hash: config_hash(config), written: Vec::new() })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}.{suffix}", self.config.name))
    }

    pub fn raw(&mut self, suffix: &str, body: &str) -> Result<PathBuf> {
        let path = self.path(suffix);
        atomic_write(&path, body.as_bytes())?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, command: &str, suffix: &str, result: &T) -> Result<Option<PathBuf>> {
        if !self.emit.json() {
            return Ok(None);
        }
        let env = Envelope { tool: TOOL, config_hash: &self.hash, command, config: self.config, result };
        let mut body = serde_json::to_string_pretty(&env).map_err(|e| HardyError::Io(e.to_string()))?;
        body.push('\n');
        self.raw(suffix, &body).map(Some)
    }

    pub fn csv(&mut self, suffix: &str, table: &Table) -> Result<Option<PathBuf>> {
        if !self.emit.csv() {
            return Ok(None);
        }
        let body = table.render(&self.hash);
        self.raw(suffix, &body).map(Some)
    }

    /// Comment line carrying the tool version and configuration hash.
    pub fn provenance(&self) -> String {
        format!("# {TOOL} config_hash={}", self.hash)
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A CSV cell.
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// 17 significant digits, '.' decimal point, LF endings.
    pub fn render(&self, hash: &str) -> String {
        let mut s = format!("# {TOOL} config_hash={hash}\n{}\n", self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format!("{x:.16e}"),
                    Cell::Int(n) => n.to_string(),
                    Cell::Text(t) if t.contains([',', '"', '\n']) => format!("\"{}\"", t.replace('"', "\"\"")),
                    Cell::Text(t) => t.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formatting() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![0.1.into(), Cell::Empty, "x,y".into()]);
        let s = t.render("h");
        assert_eq!(s, format!("# {TOOL} config_hash=h\na,b,c\n1.0000000000000001e-1,,\"x,y\"\n"));
        assert!(!s.contains('\r'));
    }
}
