//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use storedlight::ExperimentConfig;

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

/// Everything needed to re-run the command that produced a directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    /// SHA-256 of the resolved configuration (canonical JSON); absent for
    /// commands that take no configuration.
    pub config_hash: Option<String>,
    /// SHA-256 of the input data file, for commands that read one.
    pub input_hash: Option<String>,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<String>,
}

/// SHA-256 over the canonical JSON form, so equal configs hash equally
/// regardless of how they were written.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(cfg.to_json_value().to_string().as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects the files written by one command.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
    started_at: String,
}

impl OutDir {
    /// `--out-dir`, else `$OUTPUT_DIR`, else `./output`.
    pub fn resolve(flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| std::env::var_os("OUTPUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("output"))
    }

    pub fn create(root: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&root).map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root,
            files: Vec::new(),
            started_at: now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes the manifest last and returns the directory.
    pub fn finish(
        mut self,
        config_hash: Option<String>,
        input_hash: Option<String>,
        seed: Option<u64>,
    ) -> CliResult<PathBuf> {
        self.files.sort();
        let manifest = RunManifest {
            tool: "storedlight",
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            config_hash,
            input_hash,
            seed,
            started_at: self.started_at.clone(),
            finished_at: now(),
            files: self.files.clone(),
        };
        self.write_json(MANIFEST, &manifest)?;
        Ok(self.root)
    }
}
