//! Run manifests: inputs, outputs, and their content hashes, written next
//! to every artifact so runs can be compared byte for byte.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Read;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub options: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, options: serde_json::Value) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            options,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(entry(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(entry(path)?);
        Ok(())
    }

    /// Writes `manifest.json` into the output directory. Entries are sorted
    /// by path so the manifest itself is byte-stable.
    pub fn write(mut self, out_dir: &Path) -> Result<()> {
        self.inputs.sort_by(|a, b| a.path.cmp(&b.path));
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self)?;
        std::fs::write(&path, json + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

fn entry(path: &Path) -> Result<FileEntry> {
    Ok(FileEntry {
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
    })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path)
        .with_context(|| format!("cannot hash {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
