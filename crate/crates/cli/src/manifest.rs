//! Run manifests: resolved configuration, input digests and outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub struct Manifest {
    command: &'static str,
    config: Value,
    inputs: Map<String, Value>,
    outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Self {
        Manifest {
            command,
            config: serde_json::to_value(config).expect("flags serialize"),
            inputs: Map::new(),
            outputs: Vec::new(),
        }
    }

    /// Reads an input file and records its digest.
    pub fn read(&mut self, role: &str, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(
            role.to_string(),
            json!({ "path": path.display().to_string(), "sha256": sha256_hex(&bytes) }),
        );
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{} is not UTF-8 text", path.display())))
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        write_file(path, contents)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    pub fn finish(self, prefix: &Path) -> Result<PathBuf, CliError> {
        let path = with_suffix(prefix, "manifest.json");
        let value = json!({
            "artifact": "fragnet",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        let mut text = serde_json::to_string_pretty(&value).expect("manifest serializes");
        text.push('\n');
        write_file(&path, &text)?;
        Ok(path)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// `prefix.suffix`, keeping any directory part of the prefix.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
