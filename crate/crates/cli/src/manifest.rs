//! Per-run JSON manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, verbatim. `structret rerun` replays these.
    pub args: Vec<String>,
    pub working_dir: String,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
    pub version: String,
    /// Command-specific results (retrieval table, skip report, metric value).
    #[serde(default)]
    pub report: Value,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        Self {
            command: command.to_owned(),
            args: args.to_vec(),
            working_dir: std::env::current_dir()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            report: Value::Null,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_owned(), serde_json::to_value(value).expect("plain value"));
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    pub fn time(&mut self, stage: &str, since: Instant) {
        self.timings_ms
            .insert(stage.to_owned(), since.elapsed().as_secs_f64() * 1e3);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("bad manifest {}: {e}", path.display())))
    }
}

/// `--manifest` if given, else `<stem>.manifest.json` next to the main
/// output, else `<command>.manifest.json` in the working directory.
pub fn manifest_path(explicit: Option<&Path>, beside: Option<&Path>, command: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match beside {
        Some(out) => {
            let stem = out
                .file_stem()
                .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
            out.with_file_name(format!("{stem}.manifest.json"))
        }
        None => PathBuf::from(format!("{command}.manifest.json")),
    }
}
