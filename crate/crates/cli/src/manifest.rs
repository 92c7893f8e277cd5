//! Run manifests: enough to replay a command and to check what it read.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sephia_core::config::ExperimentConfig;
use sephia_core::rng::{derive_seed, names};

use crate::error::{CliError, CliResult};
use crate::Command;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "message", rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    ConfigError(String),
    RuntimeError(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: Command,
    /// Fully resolved configuration, defaults included.
    pub config: Option<serde_json::Value>,
    /// Parameters read by the command, for commands that take a params file.
    #[serde(default)]
    pub params_snapshot: Option<serde_json::Value>,
    /// Root seed and the derived sub-stream seeds.
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 over every input file and the resolved configuration.
    pub input_sha256: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub outcome: Outcome,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn config_snapshot(&self) -> CliResult<Option<ExperimentConfig>> {
        self.config
            .clone()
            .map(|v| {
                let cfg: ExperimentConfig =
                    serde_json::from_value(v).map_err(|e| CliError::Config(format!("manifest config: {e}")))?;
                cfg.validate().map_err(CliError::config)?;
                Ok(cfg)
            })
            .transpose()
    }
}

/// Named seeds of every random stream a run with root `seed` uses.
pub fn seed_table(seed: u64) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    m.insert("root".to_string(), seed);
    for name in [
        names::INIT,
        names::ENCODING,
        names::NOISE,
        names::DROPOUT,
        names::SPLIT,
        names::SHUFFLE,
        names::EVAL,
    ] {
        m.insert(name.to_string(), derive_seed(seed, name));
    }
    m
}

/// Collects inputs and outputs while a command runs and writes the manifest.
pub struct ManifestBuilder {
    command: Command,
    config: Option<serde_json::Value>,
    params: Option<serde_json::Value>,
    seeds: BTreeMap<String, u64>,
    hasher: Sha256,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
    started_unix_s: u64,
}

impl ManifestBuilder {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            config: None,
            params: None,
            seeds: BTreeMap::new(),
            hasher: Sha256::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
            started_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn config(&mut self, cfg: &ExperimentConfig) {
        let v = serde_json::to_value(cfg).expect("config serializes");
        self.hasher.update(v.to_string().as_bytes());
        self.config = Some(v);
        self.seeds = seed_table(cfg.seed);
    }

    pub fn params(&mut self, v: serde_json::Value) {
        self.hasher.update(v.to_string().as_bytes());
        self.params = Some(v);
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn hash_bytes(&mut self, bytes: &[u8]) {
        self.hasher.update(bytes);
    }

    pub fn input_file(&mut self, path: &Path) -> CliResult<()> {
        let mut f = std::fs::File::open(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let mut buf = vec![0u8; 1 << 16];
        loop {
            let n = f
                .read(&mut buf)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            if n == 0 {
                break;
            }
            self.hasher.update(&buf[..n]);
        }
        self.inputs.push(path.to_path_buf());
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn finish(self, outcome: Outcome) -> RunManifest {
        let digest = self.hasher.finalize();
        RunManifest {
            tool: format!("sephia {}", env!("CARGO_PKG_VERSION")),
            command: self.command,
            config: self.config,
            params_snapshot: self.params,
            seeds: self.seeds,
            input_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix_s: self.started_unix_s,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            outcome,
        }
    }

    /// Writes `dir/manifest.json` recording `result`, then passes it through.
    pub fn write<T>(self, dir: &Path, result: CliResult<T>) -> CliResult<T> {
        let outcome = match &result {
            Ok(_) => Outcome::Ok,
            Err(CliError::Config(m)) => Outcome::ConfigError(m.clone()),
            Err(CliError::Runtime(m)) => Outcome::RuntimeError(m.clone()),
        };
        let m = self.finish(outcome);
        let written = std::fs::create_dir_all(dir).and_then(|_| {
            std::fs::write(
                dir.join("manifest.json"),
                serde_json::to_string_pretty(&m).expect("manifest serializes"),
            )
        });
        match (result, written) {
            (Err(e), _) => Err(e),
            (Ok(_), Err(e)) => Err(CliError::Runtime(format!(
                "{}: {e}",
                dir.join("manifest.json").display()
            ))),
            (Ok(v), Ok(())) => Ok(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::BudgetArgs;

    #[test]
    fn seeds_are_named_and_distinct() {
        let t = seed_table(7);
        assert_eq!(t["root"], 7);
        assert_ne!(t["init"], t["noise"]);
        assert_eq!(seed_table(7), t);
    }

    #[test]
    fn manifest_round_trips() {
        let mut b = ManifestBuilder::new(Command::Budget(BudgetArgs::default()));
        b.config(&ExperimentConfig::default());
        let m = b.finish(Outcome::Ok);
        let back: RunManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config_snapshot().unwrap().unwrap(), ExperimentConfig::default());
        assert_eq!(m.input_sha256.len(), 64);
    }
}
