//! Shot directories and run manifests.
//!
//! A run directory looks like
//!
//! ```text
//! run.json              RunManifest
//! config.json           canonical RunConfig
//! shot_noise/sn_000.tbtr
//! shots/shot_0000/manifest.json
//! shots/shot_0000/{probe_x,probe_y,conj_x,conj_y}.tbtr
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::trace::{read_trace, write_atomic, write_trace};
use crate::error::{Error, Result};
use crate::sim::{ExperimentShot, JointQuadrature, QuadratureTrace, TraceMode};

pub const SHOT_MANIFEST: &str = "manifest.json";
pub const RUN_MANIFEST: &str = "run.json";
pub const SHOTS_DIR: &str = "shots";
pub const SHOT_NOISE_DIR: &str = "shot_noise";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFiles {
    pub probe_x: String,
    pub probe_y: String,
    pub conj_x: String,
    pub conj_y: String,
}

impl Default for TraceFiles {
    fn default() -> Self {
        Self {
            probe_x: "probe_x.tbtr".into(),
            probe_y: "probe_y.tbtr".into(),
            conj_x: "conj_x.tbtr".into(),
            conj_y: "conj_y.tbtr".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotManifest {
    pub shot_index: u64,
    /// Trigger attempts it took to accept this shot.
    #[serde(default = "one")]
    pub attempts: u32,
    /// Run seed; together with the traces' seed tags it pins every random
    /// stream used for this shot.
    pub seed: u64,
    pub squeezed_joint: JointQuadrature,
    pub config_digest: String,
    pub source_band_hz: (f64, f64),
    pub trigger_db: [f64; 2],
    pub traces: TraceFiles,
}

fn one() -> u32 {
    1
}

pub fn shot_dir_name(index: u64) -> String {
    format!("shot_{index:04}")
}

pub fn write_shot(
    dir: &Path,
    shot: &ExperimentShot,
    shot_index: u64,
    attempts: u32,
    seed: u64,
) -> Result<ShotManifest> {
    shot.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = TraceFiles::default();
    for (name, trace) in [
        (&files.probe_x, &shot.probe_x),
        (&files.probe_y, &shot.probe_y),
        (&files.conj_x, &shot.conj_x),
        (&files.conj_y, &shot.conj_y),
    ] {
        write_trace(&dir.join(name), trace)?;
    }
    let manifest = ShotManifest {
        shot_index,
        attempts,
        seed,
        squeezed_joint: shot.squeezed_joint,
        config_digest: shot.config_digest.clone(),
        source_band_hz: shot.source_band_hz,
        trigger_db: shot.trigger_db,
        traces: files,
    };
    write_json(&dir.join(SHOT_MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn read_shot(dir: &Path) -> Result<(ExperimentShot, ShotManifest)> {
    let manifest: ShotManifest = read_json(&dir.join(SHOT_MANIFEST))?;
    let load = |name: &str, mode: TraceMode| -> Result<QuadratureTrace> {
        let path = dir.join(name);
        let t = read_trace(&path)?;
        if t.mode != mode {
            return Err(Error::format(
                path,
                format!("expected a {mode:?} trace, found {:?}", t.mode),
            ));
        }
        Ok(t)
    };
    let f = &manifest.traces;
    let shot = ExperimentShot {
        probe_x: load(&f.probe_x, TraceMode::Probe)?,
        probe_y: load(&f.probe_y, TraceMode::Probe)?,
        conj_x: load(&f.conj_x, TraceMode::Conjugate)?,
        conj_y: load(&f.conj_y, TraceMode::Conjugate)?,
        squeezed_joint: manifest.squeezed_joint,
        config_digest: manifest.config_digest.clone(),
        source_band_hz: manifest.source_band_hz,
        trigger_db: manifest.trigger_db,
    };
    shot.validate()?;
    Ok((shot, manifest))
}

/// Top-level index of a run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    /// Digest of the run this one was derived from (`propagate`).
    #[serde(default)]
    pub parent_digest: Option<String>,
    /// Runs with the same source digest and seed hold the same source shots.
    pub source_digest: String,
    pub seed: u64,
    /// Shot directories relative to the run directory, in shot order.
    pub shots: Vec<String>,
    pub shot_noise: Vec<String>,
}

impl RunManifest {
    pub fn shot_paths(&self, root: &Path) -> Vec<PathBuf> {
        self.shots.iter().map(|s| root.join(s)).collect()
    }

    pub fn read_shot_noise(&self, root: &Path) -> Result<Vec<QuadratureTrace>> {
        self.shot_noise
            .iter()
            .map(|s| {
                let path = root.join(s);
                let t = read_trace(&path)?;
                if t.mode != TraceMode::ShotNoise {
                    return Err(Error::format(path, "not a shot-noise trace"));
                }
                Ok(t)
            })
            .collect()
    }
}

pub fn read_run_manifest(root: &Path) -> Result<RunManifest> {
    read_json(&root.join(RUN_MANIFEST))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Parses JSON, reporting the path of the offending field on failure.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, path)
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if field == "." {
            Error::format(path, inner.to_string())
        } else {
            Error::format(path, format!("field `{field}`: {inner}"))
        }
    })
}
