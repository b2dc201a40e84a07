//! On-disk response cache: `<key>.txt` holds the raw response bytes and
//! `<key>.json` a small metadata sidecar. Writes go through a temp file in
//! the same directory and are renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Cache key over everything that determines the response.
pub fn cache_key(model_name: &str, temperature: f64, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_name.as_bytes());
    h.update([0u8]);
    h.update(format!("{temperature:?}").as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub model: String,
    pub temperature: f64,
    pub timestamp: u64,
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| LlmError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn body_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.txt"))
    }

    pub fn load(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.body_path(key)).ok()
    }

    pub fn store(&self, key: &str, response: &str, model: &str, temperature: f64) -> Result<(), LlmError> {
        let meta = CacheMeta {
            model: model.to_string(),
            temperature,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let sidecar = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
        self.write_atomic(&self.dir.join(format!("{key}.json")), &sidecar)?;
        self.write_atomic(&self.body_path(key), response.as_bytes())
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), LlmError> {
        let err = |e: std::io::Error| LlmError::Cache(format!("{}: {e}", path.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        tmp.write_all(bytes).map_err(err)?;
        tmp.persist(path).map_err(|e| err(e.error))?;
        Ok(())
    }
}
