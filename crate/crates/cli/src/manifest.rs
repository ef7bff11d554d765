//! Run manifests: what ran, how long it took and digests of what it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// `solution`, `atlas`, `report_json` or `report_csv`.
    pub kind: String,
    /// File name relative to the manifest.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub instance_id: String,
    /// SHA-256 of the resolved configuration.
    pub config_sha256: String,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<StageTime>,
    pub outputs: Vec<OutputDigest>,
    /// Inequality rows with a failing verdict.
    pub failures: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("ma-lab".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("ma-lab-core".to_string(), ma_lab_core::VERSION.to_string()),
    ])
}

impl RunManifest {
    pub fn new(instance_id: &str, config_sha256: String) -> Self {
        Self {
            schema: ma_lab_core::SCHEMA.into(),
            instance_id: instance_id.into(),
            config_sha256,
            versions: versions(),
            stages: Vec::new(),
            outputs: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn output(&self, kind: &str) -> Option<&OutputDigest> {
        self.outputs.iter().find(|o| o.kind == kind)
    }

    /// Writes `bytes` to `dir/name` and records its digest.
    pub fn write_output(&mut self, dir: &Path, name: &str, kind: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.outputs.push(OutputDigest { kind: kind.into(), path: name.into(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(CliError::json(path))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(CliError::json(path))?;
        std::fs::write(path, text + "\n").map_err(CliError::io(path))
    }
}
