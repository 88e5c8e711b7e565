use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::Config;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the run directory.
    pub path: String,
    pub kind: String,
}

/// Record of one command invocation and everything it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub config: Config,
    /// Command-specific inputs and derived settings.
    #[serde(default)]
    pub details: serde_json::Map<String, serde_json::Value>,
    pub outputs: Vec<OutputFile>,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Collects output files while a command runs.
pub struct Run {
    pub dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn start(command: &str, dir: &Path, config: &Config, threads: Option<usize>) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                master_seed: config.seed,
                threads,
                started_unix: unix_now(),
                finished_unix: 0.0,
                config: config.clone(),
                details: serde_json::Map::new(),
                outputs: Vec::new(),
            },
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn record(&mut self, path: &Path, kind: &str) {
        let rel = path.strip_prefix(&self.dir).unwrap_or(path);
        self.manifest.outputs.push(OutputFile { path: rel.to_string_lossy().into_owned(), kind: kind.to_string() });
    }

    /// Write `name` into the run directory and record it.
    pub fn write(&mut self, name: &str, kind: &str, contents: &[u8]) -> anyhow::Result<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        self.record(&p, kind);
        Ok(p)
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> anyhow::Result<()> {
        self.manifest.details.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<RunManifest> {
        // TOML integers are signed, so seeds from 2^63 up live only in the manifest
        if let Ok(text) = self.manifest.config.to_toml() {
            self.write(CONFIG, "config", text.as_bytes())?;
        }
        self.manifest.finished_unix = unix_now();
        self.manifest.outputs.push(OutputFile { path: MANIFEST.into(), kind: "manifest".into() });
        let text = serde_json::to_string_pretty(&self.manifest)?;
        let p = self.path(MANIFEST);
        std::fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
        Ok(self.manifest)
    }
}
