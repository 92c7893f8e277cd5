//! On-disk memo for expensive results, keyed by a hash of their inputs.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use sephia_core::config::ExperimentConfig;
use sephia_core::dataset::PreparedData;
use sephia_core::design::{train_run, RunSummary};

use crate::error::{CliError, CliResult};

/// Directory of JSON files named by the SHA-256 of a key. `salt` is mixed
/// into every key so that results computed by different code never mix.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
    salt: String,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>, salt: impl Into<String>) -> Self {
        Self {
            dir: dir.into(),
            salt: salt.into(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(&self, kind: &str, parts: &[&[u8]]) -> String {
        let mut h = Sha256::new();
        for p in [self.salt.as_bytes(), kind.as_bytes()]
            .into_iter()
            .chain(parts.iter().copied())
        {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p);
        }
        let digest = h.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("{kind}-{hex}")
    }

    /// Loads `key` if present and readable, otherwise computes and stores it.
    pub fn get_or<T, F>(&self, key: &str, compute: F) -> CliResult<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> CliResult<T>,
    {
        let path = self.dir.join(format!("{key}.json"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(v) = serde_json::from_str(&text) {
                return Ok(v);
            }
        }
        let v = compute()?;
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::Runtime(format!("{}: {e}", self.dir.display())))?;
        let text = serde_json::to_string(&v).map_err(|e| CliError::Runtime(e.to_string()))?;
        // write then rename so an interrupted run never leaves a torn entry
        let tmp = self.dir.join(format!("{key}.json.tmp"));
        std::fs::write(&tmp, text)
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Ok(v)
    }
}

/// Training run, memoized on the resolved configuration when a cache is given.
pub fn cached_train_run(cache: Option<&Cache>, cfg: &ExperimentConfig, data: &PreparedData) -> CliResult<RunSummary> {
    let run = || train_run(cfg, data).map_err(CliError::runtime);
    match cache {
        None => run(),
        Some(c) => {
            let cfg_json = serde_json::to_vec(cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
            c.get_or(&c.key("train", &[&cfg_json]), run)
        }
    }
}
