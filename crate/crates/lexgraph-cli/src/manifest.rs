//! Run manifests: enough provenance to reproduce any run exactly.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;

use crate::artifacts::{sha256_file, sha256_hex, write_json};
use crate::config::Config;

#[derive(Serialize)]
pub struct ManifestInput {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub master_seed: u64,
    pub deterministic: bool,
    /// SHA-256 of the effective configuration's canonical JSON.
    pub config_hash: String,
    /// The full effective configuration, so the run can be replayed without
    /// the original config file or flags.
    pub config: serde_json::Value,
    pub inputs: Vec<ManifestInput>,
    /// Artifact file names inside the run directory.
    pub outputs: Vec<String>,
    /// Seconds since the epoch; absent under --deterministic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

/// Builder that collects inputs and outputs while a command runs, then
/// writes `manifest.json` into the run directory.
pub struct ManifestBuilder {
    manifest: RunManifest,
    out_dir: PathBuf,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &Config) -> Result<Self> {
        std::fs::create_dir_all(&config.out)?;
        let config_json = serde_json::to_vec(config)?;
        Ok(ManifestBuilder {
            manifest: RunManifest {
                toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                master_seed: config.seed,
                deterministic: config.deterministic,
                config_hash: sha256_hex(&config_json),
                config: serde_json::to_value(config)?,
                inputs: Vec::new(),
                outputs: Vec::new(),
                created_unix: if config.deterministic {
                    None
                } else {
                    Some(
                        std::time::SystemTime::now()
                            .duration_since(std::time::UNIX_EPOCH)
                            .map(|d| d.as_secs())
                            .unwrap_or(0),
                    )
                },
            },
            out_dir: config.out.clone(),
        })
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.manifest.inputs.push(ManifestInput {
            role: role.to_string(),
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn add_output(&mut self, name: &str) {
        self.manifest.outputs.push(name.to_string());
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Write an artifact into the run directory and record it.
    pub fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        crate::artifacts::atomic_write(&self.out_path(name), bytes)?;
        self.add_output(name);
        Ok(())
    }

    /// Write a JSON artifact into the run directory and record it.
    pub fn emit_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.out_path(name), value)?;
        self.add_output(name);
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.manifest.outputs.push("manifest.json".to_string());
        self.manifest.outputs.sort();
        write_json(&self.out_dir.join("manifest.json"), &self.manifest)
    }
}
