use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub prompt: String,
    pub completion: String,
    /// Seconds since the Unix epoch when the completion was fetched.
    pub timestamp: u64,
}

/// Completions on disk, one `<sha256>.json` file per (endpoint, prompt).
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(endpoint_identity: &str, prompt: &str) -> String {
        let mut h = Sha256::new();
        h.update(endpoint_identity.as_bytes());
        h.update([0u8]);
        h.update(prompt.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        let entry = serde_json::from_str(&fs::read_to_string(path)?)?;
        Ok(Some(entry))
    }

    /// Writes via a temporary file so concurrent readers never see a partial entry.
    pub fn put(&self, key: &str, prompt: &str, completion: &str) -> Result<()> {
        let entry = CacheEntry {
            prompt: prompt.to_string(),
            completion: completion.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let tmp = self.dir.join(format!("{key}.json.tmp"));
        fs::write(&tmp, serde_json::to_string_pretty(&entry)?)?;
        fs::rename(tmp, self.path(key))?;
        Ok(())
    }
}
