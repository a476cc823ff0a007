use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::sha256_hex;
use crate::error::{Error, Result};
use crate::models::ModelKind;

pub const MANIFEST_SCHEMA: &str = "manifest/v1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Stand-ins used where the original setup is out of reach at desk scale.
pub const SUBSTITUTIONS: [&str; 3] = [
    "observation: proprioceptive state vector instead of camera images",
    "agent: ensemble dynamics model with receding-horizon planning instead of a latent world model with actor-critic",
    "embedding: PCA over delay-embedded joint angles instead of UMAP",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub model: Option<ModelKind>,
    /// Named configuration digests (SHA-256 of canonical text).
    pub config_hashes: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    /// Digests of input files read by the run.
    pub inputs: BTreeMap<String, String>,
    /// Output paths relative to the run directory.
    pub outputs: Vec<String>,
    pub substitutions: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub status: String,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn begin(command: &str, arguments: Vec<String>, model: Option<ModelKind>) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            arguments,
            model,
            config_hashes: BTreeMap::new(),
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            substitutions: SUBSTITUTIONS.iter().map(|s| s.to_string()).collect(),
            started_unix: now(),
            finished_unix: None,
            status: "running".into(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn add_output(&mut self, relative: impl Into<String>) {
        self.outputs.push(relative.into());
    }

    pub fn finish(&mut self, status: &str) {
        self.finished_unix = Some(now());
        self.status = status.into();
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
