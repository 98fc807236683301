//! Per-run manifest: what ran, on which inputs, with which effective
//! settings, and what it wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cli::Command;
use crate::{json, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Parsed invocation with input paths made absolute; `lorank replay`
    /// re-executes it.
    pub invocation: Command,
    /// Effective settings after merging config file and flags.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub duration_secs: f64,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digests(paths: &[PathBuf]) -> Result<Vec<InputDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(InputDigest {
                path: p.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

impl RunManifest {
    pub fn new(invocation: Command, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: invocation.name().to_string(),
            invocation,
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_secs: 0.0,
        }
    }

    pub fn finish(mut self, inputs: Vec<InputDigest>, outputs: Vec<String>, elapsed: Duration) -> Self {
        self.inputs = inputs;
        self.outputs = outputs;
        self.duration_secs = elapsed.as_secs_f64();
        self
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = json::to_vec(self).map_err(CliError::data)?;
        fs::write(&path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}
