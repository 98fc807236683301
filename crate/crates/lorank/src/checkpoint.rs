//! Parameter checkpoints: `checkpoint.json` describing the tensors, and one
//! LRFM file per tensor next to it.

use std::fs;
use std::path::Path;

use lorank_core::model::ModelParams;
use serde::{Deserialize, Serialize};

use crate::io::{read_lrfm, write_lrfm};
use crate::{json, CliError};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// File name relative to the checkpoint directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub extractor: String,
    pub seed: u64,
    pub input_dim: usize,
    pub feature_dim: usize,
    pub n_classes: usize,
    /// Epochs completed when the checkpoint was taken.
    pub epochs_completed: usize,
    pub tensors: Vec<TensorEntry>,
}

/// Writes the checkpoint into `dir` and returns the files written, relative
/// to `dir`.
pub fn save(
    dir: &Path,
    params: &ModelParams,
    input_dim: usize,
    seed: u64,
    epochs_completed: usize,
) -> Result<Vec<String>, CliError> {
    let mut tensors = Vec::new();
    let mut files = Vec::new();
    for (name, t) in params.tensors() {
        let file = format!("{name}.lrfm");
        write_lrfm(&dir.join(&file), t)?;
        tensors.push(TensorEntry {
            name: name.to_string(),
            rows: t.rows(),
            cols: t.cols(),
            file: file.clone(),
        });
        files.push(file);
    }
    let manifest = CheckpointManifest {
        extractor: params.extractor.kind().to_string(),
        seed,
        input_dim,
        feature_dim: params.feature_dim(),
        n_classes: params.n_classes(),
        epochs_completed,
        tensors,
    };
    let path = dir.join(CHECKPOINT_FILE);
    let text = json::to_vec(&manifest).map_err(CliError::data)?;
    fs::write(&path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    files.push(CHECKPOINT_FILE.to_string());
    Ok(files)
}

/// Loads a checkpoint from a directory holding `checkpoint.json`, or from the
/// path of that file itself.
pub fn load(path: &Path) -> Result<(CheckpointManifest, ModelParams), CliError> {
    let (dir, file) = if path.is_dir() {
        (path.to_path_buf(), path.join(CHECKPOINT_FILE))
    } else {
        (
            path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            path.to_path_buf(),
        )
    };
    let text = fs::read(&file).map_err(|e| CliError::data(format!("{}: {e}", file.display())))?;
    let manifest: CheckpointManifest =
        serde_json::from_slice(&text).map_err(|e| CliError::data(format!("{}: {e}", file.display())))?;
    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    for entry in &manifest.tensors {
        let t = read_lrfm(&dir.join(&entry.file))?;
        if t.shape() != (entry.rows, entry.cols) {
            return Err(CliError::data(format!(
                "{}: tensor {} has shape {:?}, checkpoint says {}x{}",
                file.display(),
                entry.name,
                t.shape(),
                entry.rows,
                entry.cols
            )));
        }
        tensors.push(t);
    }
    let params = ModelParams::from_tensors(&manifest.extractor, tensors).map_err(CliError::data)?;
    Ok((manifest, params))
}
