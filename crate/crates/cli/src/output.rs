use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_SCHEMA: &str = "photonchip.manifest/v1";

/// Run directory that records every file written into it.
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'a str,
    tool: &'a str,
    version: &'a str,
    verb: &'a str,
    config_sha256: String,
    seed: Option<u64>,
    files: &'a [String],
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Path for a new output file, recorded in the manifest.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.root.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    /// Writes `config.json` and `manifest.json`.
    pub fn finish(mut self, verb: &str, config: &ExperimentConfig) -> Result<(), CliError> {
        let text = config.to_json();
        self.write_text("config.json", &text)?;
        let files = std::mem::take(&mut self.files);
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA,
            tool: "photonchip",
            version: env!("CARGO_PKG_VERSION"),
            verb,
            config_sha256: hex::encode(Sha256::digest(text.as_bytes())),
            seed: config.seed,
            files: &files,
        };
        let path = self.root.join("manifest.json");
        let mut out = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Other(e.to_string()))?;
        out.push('\n');
        std::fs::write(&path, out).map_err(|e| CliError::io(&path, e))
    }
}
