//! Run configuration: JSON with strict keys, module defaults for anything
//! left out, and a digest of the canonical form.
//!
//! The squeezing may be given as `r` or `r_db`, either at the top level or
//! inside `source`, but only once.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{BandpassSpec, LagGrid, NoiseBand, SweepSettings};
use crate::dispersion::{kramers_kronig_phase, synth_gain_profile, FrequencyGrid, LorentzianLine, MediumResponse};
use crate::error::{Error, Result};
use crate::gaussian::{r_from_db, Mode};
use crate::sim::{SqueezingSpectrum, TriggerSpec, DEFAULT_SAMPLE_PERIOD_S, DEFAULT_TRACE_LENGTH};

/// Seed tags keep four bits for the trigger attempt.
pub const MAX_TRIGGER_ATTEMPTS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunLabel {
    Reference,
    Fast,
    Slow,
}

impl RunLabel {
    pub const ALL: [RunLabel; 3] = [RunLabel::Reference, RunLabel::Fast, RunLabel::Slow];

    pub fn as_str(self) -> &'static str {
        match self {
            RunLabel::Reference => "reference",
            RunLabel::Fast => "fast",
            RunLabel::Slow => "slow",
        }
    }
}

impl fmt::Display for RunLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RunLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RunLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::config("label", format!("expected reference, fast or slow, got {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub r: f64,
    pub band_hz: (f64, f64),
    pub rolloff_fraction: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        let s = SqueezingSpectrum::default();
        Self {
            r: s.r,
            band_hz: s.band_hz,
            rolloff_fraction: s.rolloff_fraction,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub min_hz: f64,
    pub max_hz: f64,
    pub step_hz: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min_hz: -200e6,
            max_hz: 200e6,
            step_hz: 10e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    pub lines: Vec<LorentzianLine>,
    pub grid: GridConfig,
    /// Mode sent through the medium.
    pub mode: Mode,
    /// Detuning that detection frequency 0 maps to.
    pub detection_offset_hz: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            lines: Vec::new(),
            grid: GridConfig::default(),
            mode: Mode::Conjugate,
            detection_offset_hz: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    pub length: usize,
    pub sample_period_s: f64,
    pub trials: usize,
    pub seed: u64,
    pub shot_noise_traces: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            length: DEFAULT_TRACE_LENGTH,
            sample_period_s: DEFAULT_SAMPLE_PERIOD_S,
            trials: 100,
            seed: 1,
            shot_noise_traces: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayConfig {
    pub min_ns: f64,
    pub max_ns: f64,
    pub step_ns: f64,
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self {
            min_ns: -200.0,
            max_ns: 200.0,
            step_ns: 0.4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub band_hz: (f64, f64),
    /// `null` disables the detection filter.
    pub filter: Option<BandpassSpec>,
    pub delays_ns: DelayConfig,
    pub trigger: TriggerSpec,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let b = NoiseBand::default();
        Self {
            band_hz: (b.lo_hz, b.hi_hz),
            filter: Some(BandpassSpec::default()),
            delays_ns: DelayConfig::default(),
            trigger: TriggerSpec::default(),
        }
    }
}

/// Fully defaulted, validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub label: RunLabel,
    pub source: SourceConfig,
    pub medium: MediumConfig,
    pub acquisition: AcquisitionConfig,
    pub analysis: AnalysisConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    r: Option<f64>,
    r_db: Option<f64>,
    band_hz: Option<(f64, f64)>,
    rolloff_fraction: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    label: RunLabel,
    r: Option<f64>,
    r_db: Option<f64>,
    source: Option<RawSource>,
    #[serde(default)]
    medium: MediumConfig,
    #[serde(default)]
    acquisition: AcquisitionConfig,
    #[serde(default)]
    analysis: AnalysisConfig,
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig> {
        let source = self.source.unwrap_or(RawSource {
            r: None,
            r_db: None,
            band_hz: None,
            rolloff_fraction: None,
        });
        let given = [
            ("r", self.r),
            ("r_db", self.r_db),
            ("source.r", source.r),
            ("source.r_db", source.r_db),
        ];
        let set: Vec<_> = given.iter().filter(|(_, v)| v.is_some()).collect();
        if set.len() > 1 {
            let names: Vec<_> = set.iter().map(|(n, _)| *n).collect();
            return Err(Error::config(
                names[1],
                format!("squeezing given more than once ({})", names.join(", ")),
            ));
        }
        let defaults = SourceConfig::default();
        let r = match set.first() {
            None => defaults.r,
            Some((name, Some(v))) if name.ends_with("r_db") => {
                r_from_db(*v).map_err(|e| Error::config(*name, e.to_string()))?
            }
            Some((_, v)) => v.expect("filtered on is_some"),
        };
        let r_field = set.first().map_or("source.r", |(n, _)| n);
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::config(r_field, format!("must be finite and >= 0, got {r}")));
        }
        let cfg = RunConfig {
            label: self.label,
            source: SourceConfig {
                r,
                band_hz: source.band_hz.unwrap_or(defaults.band_hz),
                rolloff_fraction: source.rolloff_fraction.unwrap_or(defaults.rolloff_fraction),
            },
            medium: self.medium,
            acquisition: self.acquisition,
            analysis: self.analysis,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn cfg_err(field: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::config(field, e.to_string())
}

impl RunConfig {
    /// Defaults for everything, with the given label and no medium lines.
    pub fn with_label(label: RunLabel) -> Self {
        Self {
            label,
            source: SourceConfig::default(),
            medium: MediumConfig::default(),
            acquisition: AcquisitionConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }

    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.acquisition.sample_period_s
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.acquisition;
        if a.length < 8 || !a.length.is_multiple_of(2) {
            return Err(Error::config(
                "acquisition.length",
                format!("must be even and >= 8, got {}", a.length),
            ));
        }
        if !(a.sample_period_s.is_finite() && a.sample_period_s > 0.0) {
            return Err(Error::config("acquisition.sample_period_s", "must be > 0"));
        }
        if a.trials == 0 {
            return Err(Error::config("acquisition.trials", "must be >= 1"));
        }
        if a.shot_noise_traces == 0 {
            return Err(Error::config("acquisition.shot_noise_traces", "must be >= 1"));
        }
        let nyquist = self.nyquist_hz();
        self.spectrum().map_err(cfg_err("source"))?;
        let (lo, hi) = self.source.band_hz;
        if hi >= nyquist {
            return Err(Error::config(
                "source.band_hz",
                format!("upper edge {hi} Hz is not below the Nyquist frequency {nyquist} Hz"),
            ));
        }
        let band = self.noise_band().map_err(cfg_err("analysis.band_hz"))?;
        if band.hi_hz >= nyquist {
            return Err(Error::config(
                "analysis.band_hz",
                format!(
                    "upper edge {} Hz is not below the Nyquist frequency {nyquist} Hz",
                    band.hi_hz
                ),
            ));
        }
        if let Some(f) = &self.analysis.filter {
            f.validate(nyquist).map_err(cfg_err("analysis.filter"))?;
        }
        let lags = self.lag_grid().map_err(cfg_err("analysis.delays_ns"))?;
        lags.check_trace_length(a.length)
            .map_err(cfg_err("analysis.delays_ns"))?;
        let t = &self.analysis.trigger;
        if t.max_attempts == 0 || t.max_attempts > MAX_TRIGGER_ATTEMPTS {
            return Err(Error::config(
                "analysis.trigger.max_attempts",
                format!("must lie in 1..={MAX_TRIGGER_ATTEMPTS}, got {}", t.max_attempts),
            ));
        }
        if t.enabled
            && !(t.rbw_hz > 0.0 && t.center_hz - 0.5 * t.rbw_hz > 0.0 && t.center_hz + 0.5 * t.rbw_hz < nyquist)
        {
            return Err(Error::config(
                "analysis.trigger",
                "window must lie between 0 Hz and Nyquist",
            ));
        }
        let grid = self.frequency_grid().map_err(cfg_err("medium.grid"))?;
        for (i, line) in self.medium.lines.iter().enumerate() {
            line.validate().map_err(cfg_err(&format!("medium.lines[{i}]")))?;
        }
        if self.label == RunLabel::Reference && !self.medium.lines.is_empty() {
            return Err(Error::config("medium.lines", "a reference run has no medium"));
        }
        if !self.medium.lines.is_empty() {
            let off = self.medium.detection_offset_hz;
            for edge in [lo, hi] {
                if !grid.contains(off + edge) {
                    return Err(Error::config(
                        "medium.grid",
                        format!("does not cover the source band edge {edge} Hz at offset {off} Hz"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Result<SqueezingSpectrum> {
        let s = SqueezingSpectrum {
            r: self.source.r,
            band_hz: self.source.band_hz,
            rolloff_fraction: self.source.rolloff_fraction,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn noise_band(&self) -> Result<NoiseBand> {
        NoiseBand::new(self.analysis.band_hz.0, self.analysis.band_hz.1)
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        let g = &self.medium.grid;
        FrequencyGrid::spanning(g.min_hz, g.max_hz, g.step_hz)
    }

    pub fn lag_grid(&self) -> Result<LagGrid> {
        let d = &self.analysis.delays_ns;
        LagGrid::from_delays(
            d.min_ns * 1e-9,
            d.max_ns * 1e-9,
            d.step_ns * 1e-9,
            self.acquisition.sample_period_s,
        )
    }

    pub fn sweep_settings(&self) -> Result<SweepSettings> {
        Ok(SweepSettings {
            band: self.noise_band()?,
            filter: self.analysis.filter,
            lagged_mode: self.medium.mode,
        })
    }

    /// Medium response, or `None` when there are no gain lines.
    pub fn medium_response(&self) -> Result<Option<MediumResponse>> {
        if self.medium.lines.is_empty() {
            return Ok(None);
        }
        let grid = self.frequency_grid()?;
        let profile = synth_gain_profile(&self.medium.lines, &grid)?;
        Ok(Some(kramers_kronig_phase(&profile)?))
    }

    /// Canonical JSON: keys sorted, no whitespace.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Digest of the parts that determine the source shots (source,
    /// acquisition and trigger). Runs sharing it see the same source states.
    pub fn source_digest(&self) -> String {
        let value = serde_json::json!({
            "source": self.source,
            "acquisition": self.acquisition,
            "trigger": self.analysis.trigger,
        });
        hex::encode(Sha256::digest(
            serde_json::to_string(&value).expect("value serializes").as_bytes(),
        ))
    }
}

pub fn parse_config(text: &str, origin: &Path) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if field == "." {
            Error::format(origin, inner.to_string())
        } else {
            Error::config(field, inner.to_string())
        }
    })?;
    raw.resolve()
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

const PRESET_REFERENCE: &str = include_str!("../../presets/reference.json");
const PRESET_FAST: &str = include_str!("../../presets/fast.json");
const PRESET_SLOW: &str = include_str!("../../presets/slow.json");

pub fn preset_text(label: RunLabel) -> &'static str {
    match label {
        RunLabel::Reference => PRESET_REFERENCE,
        RunLabel::Fast => PRESET_FAST,
        RunLabel::Slow => PRESET_SLOW,
    }
}

/// One of the shipped presets.
pub fn preset(label: RunLabel) -> RunConfig {
    parse_config(preset_text(label), Path::new(&format!("presets/{label}.json"))).expect("shipped presets are valid")
}
