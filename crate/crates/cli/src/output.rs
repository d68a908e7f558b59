use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Serialize)]
struct Artifact {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: String,
    config: &'a RunConfig,
    outputs: &'a [Artifact],
    notes: &'a [String],
}

/// Collects the files a command writes so the manifest can list them.
/// Every path is a plain file name inside the output directory.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<Artifact>,
    notes: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_owned(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_owned(),
            written: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })?;
        self.written.push(Artifact {
            file: name.to_owned(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("output serializes");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn note(&mut self, note: String) {
        log::warn!("{note}");
        self.notes.push(note);
    }

    /// Writes `manifest.json` and returns the output directory.
    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: config.hash(),
            config,
            outputs: &self.written,
            notes: &self.notes,
        };
        let value = serde_json::to_value(&manifest).expect("manifest serializes");
        self.write_json("manifest.json", &value)?;
        Ok(self.dir)
    }
}
