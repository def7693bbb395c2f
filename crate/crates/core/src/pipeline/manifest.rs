use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOLKIT: &str = concat!("treestack ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub sha256: String,
    pub bytes: u64,
}

/// Everything a run produced, keyed by path relative to the output dir.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seed: u64,
    /// Input data files by content hash.
    pub data: BTreeMap<String, String>,
    /// Resolved values of every fixed modelling choice.
    pub decisions: BTreeMap<String, serde_json::Value>,
    /// Wall-clock seconds per stage.
    pub stages: BTreeMap<String, f64>,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

impl RunManifest {
    pub fn new(config: serde_json::Value, seed: u64) -> Result<Self> {
        let config_hash = sha256_hex(&serde_json::to_vec(&config)?);
        Ok(RunManifest {
            toolkit: TOOLKIT.into(),
            config,
            config_hash,
            seed,
            data: BTreeMap::new(),
            decisions: BTreeMap::new(),
            stages: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        })
    }

    pub fn load(out_dir: &Path) -> Result<Option<Self>> {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Some(serde_json::from_slice(&bytes)?))
    }

    pub fn save(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn record(&mut self, out_dir: &Path, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let rel = path.strip_prefix(out_dir).unwrap_or(path);
        self.artifacts.insert(
            rel.to_string_lossy().replace('\\', "/"),
            ArtifactEntry {
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            },
        );
        Ok(())
    }

    /// Re-hashes every artifact; errors on the first missing or changed file.
    pub fn verify(&self, out_dir: &Path) -> Result<()> {
        for (rel, entry) in &self.artifacts {
            let path = out_dir.join(rel);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(Error::Schema(format!(
                    "{rel}: content differs from manifest"
                )));
            }
        }
        Ok(())
    }
}
