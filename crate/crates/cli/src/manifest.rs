use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ews_core::{Error, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::settings::Settings;

/// Provenance record written next to every command's outputs.
pub struct Manifest {
    command: &'static str,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    extra: Value,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(command: &'static str, settings: &Settings) -> Result<Self> {
        let mut m = Manifest {
            command,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            extra: Value::Null,
        };
        if let Some(p) = &settings.config_path {
            m.input(p)?;
        }
        Ok(m)
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let hash = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), hash);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn extra(&mut self, value: Value) {
        self.extra = value;
    }

    pub fn write(self, settings: &Settings, dir: &Path) -> Result<PathBuf> {
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": settings.seed()?,
            "config": settings.config.entries(),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "details": self.extra,
        });
        let path = dir.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(&doc).expect("manifest is plain JSON");
        std::fs::write(&path, text + "\n").map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        Ok(path)
    }
}
