//! Result tables and their CSV form.
//!
//! Every file starts with one comment line holding a JSON header
//! (`# {"config": …, "config_hash": …, "seed": …, "version": …}`), then a
//! column line, then the rows. Floats are written in Rust's shortest
//! round-trip form, so equal results give byte-identical files.

use std::fmt;
use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::Result;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<u32> for Cell {
    fn from(n: u32) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

/// Rows under fixed column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Float values of column `name`, over rows where `filter` holds.
    pub fn floats<F: Fn(&[Cell]) -> bool>(&self, name: &str, filter: F) -> Vec<f64> {
        let Some(k) = self.column(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|r| filter(r))
            .filter_map(|r| match r[k] {
                Cell::Float(x) => Some(x),
                Cell::Int(n) => Some(n as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

/// Metadata embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
}

/// SHA-256 of the canonical JSON form of `cfg`, hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// The header for a run of `cfg`. Where the output goes does not affect
/// its contents, so `output_path` is left out.
pub fn header(cfg: &ExperimentConfig) -> Header {
    let config = ExperimentConfig {
        output_path: None,
        ..cfg.clone()
    };
    Header {
        config_hash: config_hash(&config),
        seed: config.seed,
        version: crate::VERSION,
        config,
    }
}

pub fn write_csv<W: Write>(mut out: W, cfg: &ExperimentConfig, table: &Table) -> Result<()> {
    let head = serde_json::to_string(&header(cfg)).expect("header serializes");
    writeln!(out, "# {head}")?;
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig::default();
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![0.1.into(), 3usize.into(), "x".into()]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &cfg, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# {"));
        let head: serde_json::Value = serde_json::from_str(&lines[0][2..]).unwrap();
        assert_eq!(head["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(head["seed"], cfg.seed);
        assert_eq!(lines[1], "a,b,c");
        assert_eq!(lines[2], "0.1,3,x");
    }

    #[test]
    fn hash_tracks_the_config() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
