use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use ttinv_core::rank::DiskCertificate;

use crate::config::Resolved;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub settings: Resolved,
    pub metrics: Map<String, Value>,
    /// Wall-clock seconds per stage; measured on this machine only.
    pub runtimes: Map<String, Value>,
    pub certificates: Vec<DiskCertificate>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn new(command: Vec<String>, settings: Resolved) -> Self {
        RunReport {
            command,
            settings,
            metrics: Map::new(),
            runtimes: Map::new(),
            certificates: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        self.metrics.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn runtime(&mut self, key: &str, seconds: f64) {
        self.runtimes.insert(key.into(), Value::from(seconds));
    }

    pub fn write(&mut self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("report.json");
        self.outputs.push(path.clone());
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Numeric(e.to_string()))?;
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// A numeric cell; `None` is written as an empty field.
pub type Cell = Option<f64>;

/// CSV with a header row. `{:?}` on `f64` prints the shortest string that parses
/// back to the same value, switching to exponent form for tiny or huge values.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(|v| format!("{v:?}")).unwrap_or_default()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
