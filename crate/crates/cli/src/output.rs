use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use quench_core::{QuenchProtocol, SystemParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Text form of a number in data files: 12 significant digits, plain
/// notation for moderate magnitudes and exponent notation otherwise.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let r = round_sig(x);
    if r == 0.0 {
        return "0".to_string();
    }
    if (1e-5..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Applies [`round_sig`] to every float inside a JSON value.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Collects the files written by one command inside its output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes a CSV file with a header row and LF line endings.
    pub fn csv<I, R>(&mut self, name: &str, header: &[String], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.root.join(name);
        let io_err = |e: csv::Error| CliError::io(&path, e.into());
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(io_err)?;
        w.write_record(header).map_err(io_err)?;
        for row in rows {
            w.write_record(row).map_err(io_err)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes pretty-printed JSON with floats rounded to 12 significant digits.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let value = serde_json::to_value(value).map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write_json(name, &round_json(value))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json(&self, name: &str, value: &Value) -> CliResult<()> {
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    /// Writes `manifest.json`, listing every file written so far.
    pub fn finish(self, mut manifest: RunManifest) -> CliResult<RunManifest> {
        manifest.outputs = self.written.clone();
        let value = serde_json::to_value(&manifest).map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write_json(MANIFEST_FILE, &value)?;
        Ok(manifest)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Metadata describing one run and the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub tool_version: String,
    pub params: SystemParams,
    pub protocol_description: String,
    pub protocol: Option<QuenchProtocol>,
    pub dt_ns: Option<f64>,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, params: SystemParams, protocol_description: String) -> Self {
        RunManifest {
            command: command.to_string(),
            arguments: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            params,
            protocol_description,
            protocol: None,
            dt_ns: None,
            outputs: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn with_protocol(mut self, protocol: &QuenchProtocol, dt_ns: f64) -> Self {
        self.protocol = Some(protocol.clone());
        self.dt_ns = Some(dt_ns);
        self
    }

    pub fn with_dt(mut self, dt_ns: f64) -> Self {
        self.dt_ns = Some(dt_ns);
        self
    }

    pub fn with_elapsed(mut self, elapsed: Duration) -> Self {
        self.wall_clock_s = elapsed.as_secs_f64();
        self
    }
}
