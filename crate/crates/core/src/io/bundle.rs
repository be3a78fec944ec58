//! Result bundles: an index of everything a run wrote, with the config
//! digests that produced it and a SHA-256 per file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{load_config, RunLabel};
use super::manifest::{read_json, write_json};
use crate::error::{Error, Result};

pub const BUNDLE_FILE: &str = "bundle.json";
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleCondition {
    pub label: RunLabel,
    pub config_digest: String,
    pub config_file: String,
    pub sweep_file: String,
    pub n_shots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool_version: String,
    pub command: String,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultBundle {
    pub provenance: Provenance,
    pub paired: bool,
    pub conditions: Vec<BundleCondition>,
    pub summary_file: String,
    pub per_shot_file: String,
    /// Every file written by the run, relative to the bundle, with its
    /// SHA-256 in hex.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl ResultBundle {
    /// Hashes `files` (relative to `root`) into the bundle.
    pub fn hash_files<'a>(&mut self, root: &Path, files: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for f in files {
            self.files.insert(f.to_string(), sha256_file(&root.join(f))?);
        }
        Ok(())
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        write_json(&root.join(BUNDLE_FILE), self)
    }

    pub fn read(root: &Path) -> Result<Self> {
        read_json(&root.join(BUNDLE_FILE))
    }

    /// Checks file hashes, that each config file still has the recorded
    /// digest, and that the summary refers to the same digests.
    pub fn verify(&self, root: &Path) -> Result<()> {
        for (name, expected) in &self.files {
            let got = sha256_file(&root.join(name))?;
            if &got != expected {
                return Err(Error::format(
                    root.join(name),
                    format!("sha256 {got} differs from bundle record {expected}"),
                ));
            }
        }
        for required in [&self.summary_file, &self.per_shot_file] {
            if !self.files.contains_key(required) {
                return Err(Error::format(
                    root.join(BUNDLE_FILE),
                    format!("{required} is not hashed in the bundle"),
                ));
            }
        }
        let summary: serde_json::Value = read_json(&root.join(&self.summary_file))?;
        let listed: Vec<&str> = summary["conditions"]
            .as_array()
            .map(|a| a.iter().filter_map(|c| c["config_digest"].as_str()).collect())
            .unwrap_or_default();
        for c in &self.conditions {
            for f in [&c.config_file, &c.sweep_file] {
                if !self.files.contains_key(f) {
                    return Err(Error::format(
                        root.join(BUNDLE_FILE),
                        format!("{f} is not hashed in the bundle"),
                    ));
                }
            }
            let cfg = load_config(&root.join(&c.config_file))?;
            if cfg.digest() != c.config_digest {
                return Err(Error::format(
                    root.join(&c.config_file),
                    format!("digest {} differs from bundle record {}", cfg.digest(), c.config_digest),
                ));
            }
            if cfg.label != c.label {
                return Err(Error::format(
                    root.join(&c.config_file),
                    "label differs from bundle record",
                ));
            }
            if !listed.contains(&c.config_digest.as_str()) {
                return Err(Error::format(
                    root.join(&self.summary_file),
                    format!("no summary for config {}", c.config_digest),
                ));
            }
        }
        Ok(())
    }
}
