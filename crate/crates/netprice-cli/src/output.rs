//! The single writer for an output directory. Every file goes through it
//! so the manifest covers everything emitted.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub struct OutDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
    csv: bool,
    json: bool,
}

impl OutDir {
    /// Creates the directory and records the resolved config and seed.
    pub fn create(cfg: &RunConfig, seed: u64) -> Result<OutDir, CliError> {
        let root = cfg.output.dir.clone();
        fs::create_dir_all(&root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        let mut out = OutDir { root, files: BTreeMap::new(), csv: cfg.csv(), json: cfg.json() };
        out.write("config.toml", cfg.to_toml().as_bytes())?;
        out.write("seed", format!("{seed}\n").as_bytes())?;
        Ok(out)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    /// Writes a CSV produced by `fill` when CSV output is enabled.
    pub fn csv(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> netprice::Result<()>,
    ) -> Result<(), CliError> {
        if !self.csv {
            return Ok(());
        }
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| CliError::from_core("output", e))?;
        self.write(name, &buf)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        if !self.json {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes manifest.json with the SHA-256 of every emitted file.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            algorithm: &'static str,
            files: &'a BTreeMap<String, String>,
        }
        let text = serde_json::to_string_pretty(&Manifest { algorithm: "sha256", files: &self.files })
            .map_err(|e| CliError::Io(e.to_string()))?;
        let path = self.root.join("manifest.json");
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(self.root)
    }
}
