//! Atomic CSV output and run manifests.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use lipheat::femcore::fmt_f64;
use sha2::{Digest, Sha256};

use crate::config::Tolerances;
use crate::CliError;

/// Rows of a CSV file built in memory.
pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self::with_header(header.iter().map(|s| s.to_string()).collect())
    }

    pub fn with_header(header: Vec<String>) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf, width: header.len() }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        writeln!(self.buf, "{}", line.join(",")).unwrap();
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

pub enum Cell {
    F(f64),
    U(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(n) => n.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance written next to each output as `<out>.manifest.toml`.
pub struct RunManifest {
    pub command: String,
    pub config_hash: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub stages: Vec<(String, f64)>,
    pub notes: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&[u8]>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config.map(sha256_hex),
            seed,
            threads: lipheat::par::current_threads(),
            stages: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn stage(&mut self, name: &str, seconds: f64) {
        self.stages.push((name.to_string(), seconds));
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self, tol: &Tolerances) -> String {
        let mut s = String::new();
        writeln!(s, "command = {:?}", self.command).unwrap();
        if let Some(h) = &self.config_hash {
            writeln!(s, "config_sha256 = {h:?}").unwrap();
        }
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "threads = {}", self.threads).unwrap();
        writeln!(s, "\n[versions]\nlipheat-core = {:?}\nlipheat-cli = {:?}", lipheat::VERSION, env!("CARGO_PKG_VERSION"))
            .unwrap();
        writeln!(s, "\n[tolerances]").unwrap();
        for (k, v) in tol.iter() {
            writeln!(s, "{k} = {v:e}").unwrap();
        }
        writeln!(s, "\n[results]").unwrap();
        for (k, v) in &self.notes {
            writeln!(s, "{k} = {v:?}").unwrap();
        }
        writeln!(s, "\n[wall_clock_seconds]").unwrap();
        for (k, v) in &self.stages {
            writeln!(s, "{k} = {v:.3}").unwrap();
        }
        s
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    out.with_file_name(name)
}

/// Splits a CSV file into a header and rows of fields.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{} is empty", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines.map(|l| l.split(',').map(|s| s.trim().to_string()).collect()).collect();
    Ok((header, rows))
}

/// Index of a named column.
pub fn column(header: &[String], name: &str, path: &Path) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Usage(format!("{} has no column {name}", path.display())))
}

pub fn parse_f64(s: &str, path: &Path) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("{}: bad number {s}", path.display())))
}

pub fn parse_usize(s: &str, path: &Path) -> Result<usize, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("{}: bad index {s}", path.display())))
}
