use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedSource {
    Flag,
    Config,
    Entropy,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub config: toml::Value,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub workers: usize,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputDigest>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn digest_file(path: &Path) -> Result<OutputDigest, CliError> {
    let data = fs::read(path)?;
    Ok(OutputDigest {
        path: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        bytes: data.len() as u64,
        sha256: hex::encode(Sha256::digest(&data)),
    })
}

/// Collects output files and writes `manifest.json` next to them.
#[derive(Debug)]
pub struct OutputDir {
    pub dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    /// The directory is created on the first write.
    pub fn new(dir: PathBuf) -> Self {
        OutputDir { dir, written: Vec::new() }
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<PathBuf, CliError> {
        manifest.outputs = self.written.iter().map(|p| digest_file(p)).collect::<Result<_, _>>()?;
        manifest.finished = now();
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")?;
        Ok(path)
    }
}
