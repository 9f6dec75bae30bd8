use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Where machine-readable results go and whether they carry a timestamp.
#[derive(Debug, Clone, Copy)]
pub struct Output {
    pub deterministic: bool,
    pub stdout: bool,
}

impl Output {
    /// `body` (a struct serializing to an object) wrapped with the report
    /// header fields.
    pub fn envelope(&self, command: &str, body: &impl Serialize) -> Value {
        let mut map = Map::new();
        map.insert("schema_version".into(), SCHEMA_VERSION.into());
        map.insert("tool".into(), "hicp".into());
        map.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
        map.insert("command".into(), command.into());
        if !self.deterministic {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            map.insert("generated_at_unix".into(), now.into());
        }
        match serde_json::to_value(body).expect("report bodies serialize") {
            Value::Object(fields) => map.extend(fields),
            other => {
                map.insert("result".into(), other);
            }
        }
        Value::Object(map)
    }

    /// Writes the report to `path` when given; prints it when `--stdout` is
    /// set or there is no path.
    pub fn emit(&self, report: &Value, path: Option<&Path>) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(report).expect("json values serialize");
        bytes.push(b'\n');
        if let Some(p) = path {
            write_file(p, &bytes)?;
        }
        if self.stdout || path.is_none() {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes).and_then(|_| out.flush()).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
        Ok(())
    }
}

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Serializes rows as CSV with the given header.
pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// Shortest round-trip decimal for a float.
pub fn num(v: f64) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        v.to_string()
    }
}
