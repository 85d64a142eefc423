//! Run manifests: effective config echo plus SHA-256 digests of every
//! input, written next to the primary outputs. A rerun into the same
//! directory verifies the recorded digests and warns on mismatch.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    /// Input path (as given) -> SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read '{}': {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    out_dir: PathBuf,
}

impl ManifestBuilder {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        out_dir: &Path,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| {
            CliError::Input(format!("cannot create '{}': {e}", out_dir.display()))
        })?;
        Ok(Self {
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        })
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Writes a primary output file and registers it in the manifest.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Input(format!("cannot write '{}': {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    /// Compares recorded digests against a previous manifest in the same
    /// directory (if any), then writes the new manifest.
    pub fn finish(self) -> Result<(), CliError> {
        let manifest_path = self.out_dir.join("manifest.json");
        if let Ok(old) = fs::read_to_string(&manifest_path) {
            if let Ok(old) = serde_json::from_str::<Manifest>(&old) {
                for (path, digest) in &self.inputs {
                    if let Some(prev) = old.inputs.get(path) {
                        if prev != digest {
                            eprintln!(
                                "warning: input '{path}' changed since the previous run in this directory"
                            );
                        }
                    }
                }
            }
        }
        let manifest = Manifest {
            schema_version: vqbench_core::SCHEMA_VERSION,
            command: self.command,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Input(format!("manifest serialization failed: {e}")))?;
        fs::write(&manifest_path, json).map_err(|e| {
            CliError::Input(format!("cannot write '{}': {e}", manifest_path.display()))
        })?;
        Ok(())
    }
}
