use crate::failure::CliResult;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// Fully resolved configuration of the run.
    pub config: serde_json::Value,
    pub seed: u64,
    pub versions: Versions,
    pub started_at: String,
    pub finished_at: String,
    /// Output files relative to the output directory.
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub bap: String,
    pub manifest: u32,
}

pub struct Recorder {
    pub dir: PathBuf,
    command: String,
    started: DateTime<Utc>,
    outputs: Vec<String>,
}

impl Recorder {
    pub fn new(dir: &Path, command: &str) -> CliResult<Recorder> {
        std::fs::create_dir_all(dir)
            .map_err(|e| crate::failure::Failure::io(format!("{}: {e}", dir.display())))?;
        Ok(Recorder {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            started: Utc::now(),
            outputs: Vec::new(),
        })
    }

    /// Path of an output file, recorded in the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn finish(
        self,
        config: serde_json::Value,
        seed: u64,
        details: serde_json::Value,
    ) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            command: self.command,
            args: std::env::args().skip(1).collect(),
            config,
            seed,
            versions: Versions {
                bap: env!("CARGO_PKG_VERSION").to_string(),
                manifest: 1,
            },
            started_at: self.started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: self.outputs,
            details,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        bap_core::io::write_atomic(&self.dir.join(FILE_NAME), &bytes)?;
        Ok(manifest)
    }
}
