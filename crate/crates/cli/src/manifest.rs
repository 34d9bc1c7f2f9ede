//! `manifest.json`: effective configuration, seed and SHA-256 digests of the
//! inputs and outputs of one run. No timestamps, so identical runs produce
//! identical manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use propscope::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Files are hashed directly. Directories hash the sorted `name<TAB>digest`
/// lines of their regular files, skipping any manifest.
pub fn digest(path: &Path) -> Result<String> {
    if !path.is_dir() {
        return file_digest(path);
    }
    let mut entries = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if p.is_file() && name != MANIFEST {
            entries.push((name, p));
        }
    }
    entries.sort();
    let mut h = Sha256::new();
    for (name, p) in entries {
        h.update(format!("{name}\t{}\n", file_digest(&p)?).as_bytes());
    }
    Ok(hex(&h.finalize()))
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Manifest {
            tool: "propscope",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), digest(path)?);
        Ok(())
    }

    /// Digests `outputs` (relative to `dir`) and writes the manifest beside them.
    pub fn write(mut self, dir: &Path, outputs: &[String]) -> Result<()> {
        for name in outputs {
            self.outputs.insert(name.clone(), file_digest(&dir.join(name))?);
        }
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&self)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
