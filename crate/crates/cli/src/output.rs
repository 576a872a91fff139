//! Buffered result files. Nothing touches the disk until a run has
//! succeeded, so a failing run leaves no partial outputs behind.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

pub const TOOL: &str = concat!("te-spect ", env!("CARGO_PKG_VERSION"));

/// 17 significant digits: round-trips every double.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Outputs {
    config_hash: String,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(config_hash: &str) -> Self {
        Outputs { config_hash: config_hash.to_string(), files: Vec::new() }
    }

    pub fn header(&self) -> String {
        format!("# {TOOL} config-sha256={}", self.config_hash)
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
        let mut text = self.header();
        text.push('\n');
        text.push_str(&columns.join(","));
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.files.push((name.to_string(), text));
    }

    /// Writes `body` as a JSON object extended by `tool` and `config_sha256`.
    /// Keys come out sorted.
    pub fn json(&mut self, name: &str, body: &impl Serialize) {
        let mut obj = Map::new();
        obj.insert("tool".into(), Value::String(TOOL.into()));
        obj.insert("config_sha256".into(), Value::String(self.config_hash.clone()));
        match serde_json::to_value(body).expect("report serializes") {
            Value::Object(fields) => obj.extend(fields),
            other => {
                obj.insert("value".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json renders");
        text.push('\n');
        self.files.push((name.to_string(), text));
    }

    pub fn resolved_config(&mut self, rendered: &str) {
        let text = format!("{}\n{rendered}", self.header());
        self.files.push(("config.resolved".into(), text));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, text) in &self.files {
            let path = dir.join(name);
            fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}
