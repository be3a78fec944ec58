//! End-to-end runs: synthesize or load shots, propagate, sweep, aggregate
//! and summarize.
//!
//! Shots are processed on a bounded rayon pool and the per-shot reductions
//! are sorted by shot index before aggregation, so results do not depend on
//! the number of workers.

use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    mi_peak_shift, peak_advance_from_sets, sweep_shot, DelaySweepResult, EdgeLevel, EdgeTiming, LagGrid,
    ShotNoiseLevel, ShotSpectra, ShotSweep, SweepSettings,
};
use crate::dispersion::MediumResponse;
use crate::error::{Error, Result};
use crate::io::config::{load_config, RunConfig, RunLabel};
use crate::io::manifest::{read_run_manifest, read_shot};
use crate::sim::{
    propagate_through_medium, seed_tag, shot_noise_reference, synthesize_shot, ExperimentShot, JointQuadrature,
    QuadratureTrace, StreamRole,
};

/// Shot-noise traces take shot indices from here up, clear of real shots.
pub const SHOT_NOISE_INDEX_BASE: u64 = 1 << 48;

/// Name of the canonical config file in a run directory.
pub const CONFIG_FILE: &str = "config.json";

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// A condition ready to run: its config plus the derived medium and sweep
/// settings.
#[derive(Clone, Debug)]
pub struct Condition {
    pub config: RunConfig,
    pub response: Option<MediumResponse>,
    pub settings: SweepSettings,
    pub lags: LagGrid,
}

impl Condition {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            response: config.medium_response()?,
            settings: config.sweep_settings()?,
            lags: config.lag_grid()?,
            config,
        })
    }

    pub fn label(&self) -> RunLabel {
        self.config.label
    }
}

pub fn shot_noise_traces(config: &RunConfig) -> Result<Vec<QuadratureTrace>> {
    let a = &config.acquisition;
    (0..a.shot_noise_traces as u64)
        .map(|i| {
            shot_noise_reference(
                a.length,
                a.sample_period_s,
                a.seed,
                seed_tag(SHOT_NOISE_INDEX_BASE + i, 0, StreamRole::ShotNoise),
            )
        })
        .collect()
}

pub fn shot_noise_level(config: &RunConfig, traces: &[QuadratureTrace]) -> Result<ShotNoiseLevel> {
    ShotNoiseLevel::from_traces(traces, config.noise_band()?, config.analysis.filter)
}

/// Source shot `index`, redrawn with fresh attempts until the trigger
/// accepts it. Returns the shot and the number of attempts used; when no
/// attempt passes, the last one is kept.
pub fn source_shot(config: &RunConfig, index: u64) -> Result<(ExperimentShot, u32, bool)> {
    let spec = config.spectrum()?;
    let a = &config.acquisition;
    let trigger = &config.analysis.trigger;
    let attempts = if trigger.enabled {
        trigger.max_attempts.max(1)
    } else {
        1
    };
    let digest = config.source_digest();
    let mut last = None;
    for attempt in 0..attempts {
        let tag = seed_tag(index, attempt as u64, StreamRole::Source);
        let mut shot = synthesize_shot(&spec, a.length, a.sample_period_s, a.seed, tag, trigger)?;
        shot.config_digest = digest.clone();
        if trigger.accepts(&shot) {
            return Ok((shot, attempt + 1, true));
        }
        last = Some(shot);
    }
    warn!("shot {index}: trigger never fired in {attempts} attempts; keeping the last one");
    Ok((last.expect("at least one attempt"), attempts, false))
}

/// Sends a source shot through the condition's medium.
pub fn apply_medium(condition: &Condition, shot: &ExperimentShot) -> Result<ExperimentShot> {
    let mut out = match &condition.response {
        None => shot.clone(),
        Some(resp) => propagate_through_medium(
            shot,
            resp,
            condition.config.medium.mode,
            condition.config.medium.detection_offset_hz,
            condition.config.acquisition.seed,
        )?,
    };
    out.config_digest = condition.config.digest();
    Ok(out)
}

/// Per-shot bookkeeping kept for the result table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotInfo {
    pub shot_index: u64,
    pub attempts: u32,
    pub triggered: bool,
    pub squeezed_joint: JointQuadrature,
    pub trigger_db: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct ConditionResult {
    pub config: RunConfig,
    pub result: DelaySweepResult,
    pub shot_noise: ShotNoiseLevel,
}

/// Everything a run produces before it is written out.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub conditions: Vec<ConditionResult>,
    pub shots: Vec<ShotInfo>,
    /// Conditions share their source shots one to one.
    pub paired: bool,
}

impl RunOutput {
    pub fn reference(&self) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.config.label == RunLabel::Reference)
    }

    pub fn condition(&self, label: RunLabel) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.config.label == label)
    }
}

fn check_shared_source(conditions: &[Condition]) -> Result<()> {
    let first = conditions
        .first()
        .ok_or_else(|| Error::invalid("conditions", "need at least one"))?;
    let digest = first.config.source_digest();
    for c in &conditions[1..] {
        if c.config.source_digest() != digest {
            return Err(Error::config(
                c.config.label.as_str(),
                "source, acquisition and trigger settings must match across conditions",
            ));
        }
    }
    Ok(())
}

/// Simulates `trials` source shots and runs every condition on each of
/// them (common random numbers: the conditions differ only by the medium).
pub fn run_simulated(conditions: &[Condition], jobs: usize) -> Result<RunOutput> {
    check_shared_source(conditions)?;
    let base = &conditions[0].config;
    let sn_traces = shot_noise_traces(base)?;
    let levels: Vec<ShotNoiseLevel> = conditions
        .iter()
        .map(|c| shot_noise_level(&c.config, &sn_traces))
        .collect::<Result<_>>()?;
    drop(sn_traces);
    for (c, sn) in conditions.iter().zip(&levels) {
        c.lags.check_trace_length(c.config.acquisition.length)?;
        if sn.length != c.config.acquisition.length {
            return Err(Error::TraceMismatch(
                "shot-noise traces differ in length from the shots".into(),
            ));
        }
    }
    let trials = base.acquisition.trials as u64;
    info!(
        "simulating {trials} shots x {} conditions on {jobs} workers",
        conditions.len()
    );
    let pool = thread_pool(jobs)?;
    let mut per_shot: Vec<(ShotInfo, Vec<ShotSweep>)> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|index| -> Result<(ShotInfo, Vec<ShotSweep>)> {
                let (shot, attempts, triggered) = source_shot(base, index)?;
                let info = ShotInfo {
                    shot_index: index,
                    attempts,
                    triggered,
                    squeezed_joint: shot.squeezed_joint,
                    trigger_db: shot.trigger_db,
                };
                let sweeps = conditions
                    .iter()
                    .zip(&levels)
                    .map(|(c, sn)| {
                        let out = apply_medium(c, &shot)?;
                        let spectra = ShotSpectra::new(&out, c.settings.band, c.settings.filter)?;
                        sweep_shot(&spectra, &c.lags, c.settings.lagged_mode, sn)
                    })
                    .collect::<Result<_>>()?;
                debug!("shot {index} done");
                Ok((info, sweeps))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    per_shot.sort_by_key(|(info, _)| info.shot_index);
    assemble(conditions, levels, per_shot, true)
}

fn assemble(
    conditions: &[Condition],
    levels: Vec<ShotNoiseLevel>,
    per_shot: Vec<(ShotInfo, Vec<ShotSweep>)>,
    paired: bool,
) -> Result<RunOutput> {
    let mut columns: Vec<Vec<ShotSweep>> = vec![Vec::with_capacity(per_shot.len()); conditions.len()];
    let mut shots = Vec::with_capacity(per_shot.len());
    for (info, sweeps) in per_shot {
        for (col, s) in columns.iter_mut().zip(sweeps) {
            col.push(s);
        }
        shots.push(info);
    }
    let results = conditions
        .iter()
        .zip(levels)
        .zip(columns)
        .map(|((c, sn), sweeps)| {
            Ok(ConditionResult {
                config: c.config.clone(),
                result: DelaySweepResult::aggregate(c.lags, c.settings.lagged_mode, &sweeps, &sn)?,
                shot_noise: sn,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RunOutput {
        conditions: results,
        shots,
        paired,
    })
}

/// A run directory opened for analysis.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub root: PathBuf,
    pub condition: Condition,
    pub shot_dirs: Vec<PathBuf>,
    pub shot_noise: Vec<QuadratureTrace>,
    pub source_digest: String,
    pub seed: u64,
}

impl RunDir {
    pub fn open(root: &Path) -> Result<Self> {
        let manifest = read_run_manifest(root)?;
        let config = load_config(&root.join(CONFIG_FILE))?;
        let digest = config.digest();
        if digest != manifest.config_digest {
            return Err(Error::format(
                root.join(CONFIG_FILE),
                format!(
                    "config digest {digest} does not match the run manifest ({})",
                    manifest.config_digest
                ),
            ));
        }
        Ok(Self {
            root: root.to_path_buf(),
            shot_dirs: manifest.shot_paths(root),
            shot_noise: manifest.read_shot_noise(root)?,
            source_digest: manifest.source_digest.clone(),
            seed: manifest.seed,
            condition: Condition::new(config)?,
        })
    }
}

/// Analyzes shots stored on disk. Each directory is one condition; shots
/// are read, reduced and dropped one at a time per worker.
pub fn run_from_dirs(dirs: &[RunDir], jobs: usize) -> Result<RunOutput> {
    let first = dirs
        .first()
        .ok_or_else(|| Error::invalid("runs", "need at least one run directory"))?;
    let n = first.shot_dirs.len();
    let paired = dirs
        .iter()
        .all(|d| d.source_digest == first.source_digest && d.seed == first.seed && d.shot_dirs.len() == n);
    if !paired && dirs.len() > 1 {
        info!("run directories do not share source shots; comparisons are unpaired");
    }
    let conditions: Vec<Condition> = dirs.iter().map(|d| d.condition.clone()).collect();
    let levels: Vec<ShotNoiseLevel> = dirs
        .iter()
        .map(|d| shot_noise_level(&d.condition.config, &d.shot_noise))
        .collect::<Result<_>>()?;
    let pool = thread_pool(jobs)?;
    if paired {
        let mut per_shot = pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|i| -> Result<(ShotInfo, Vec<ShotSweep>)> {
                    let mut info = None;
                    let mut sweeps = Vec::with_capacity(dirs.len());
                    for (d, sn) in dirs.iter().zip(&levels) {
                        let (shot_info, sweep) = load_and_sweep(d, &d.shot_dirs[i], sn)?;
                        info.get_or_insert(shot_info);
                        sweeps.push(sweep);
                    }
                    Ok((info.expect("at least one directory"), sweeps))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        per_shot.sort_by_key(|(info, _)| info.shot_index);
        return assemble(&conditions, levels, per_shot, true);
    }
    let mut results = Vec::with_capacity(dirs.len());
    let mut shots = Vec::new();
    for (d, sn) in dirs.iter().zip(levels) {
        let mut per_shot = pool.install(|| {
            d.shot_dirs
                .par_iter()
                .map(|p| load_and_sweep(d, p, &sn))
                .collect::<Result<Vec<_>>>()
        })?;
        per_shot.sort_by_key(|(info, _)| info.shot_index);
        let sweeps: Vec<ShotSweep> = per_shot.iter().map(|(_, s)| s.clone()).collect();
        if shots.is_empty() {
            shots = per_shot.into_iter().map(|(i, _)| i).collect();
        }
        let c = &d.condition;
        results.push(ConditionResult {
            config: c.config.clone(),
            result: DelaySweepResult::aggregate(c.lags, c.settings.lagged_mode, &sweeps, &sn)?,
            shot_noise: sn,
        });
    }
    Ok(RunOutput {
        conditions: results,
        shots,
        paired: dirs.len() == 1,
    })
}

fn load_and_sweep(d: &RunDir, shot_dir: &Path, sn: &ShotNoiseLevel) -> Result<(ShotInfo, ShotSweep)> {
    let (shot, manifest) = read_shot(shot_dir)?;
    let c = &d.condition;
    c.lags.check_trace_length(shot.len())?;
    let spectra = ShotSpectra::new(&shot, c.settings.band, c.settings.filter)?;
    let sweep = sweep_shot(&spectra, &c.lags, c.settings.lagged_mode, sn)?;
    Ok((
        ShotInfo {
            shot_index: manifest.shot_index,
            attempts: manifest.attempts,
            triggered: c.config.analysis.trigger.accepts(&shot),
            squeezed_joint: manifest.squeezed_joint,
            trigger_db: manifest.trigger_db,
        },
        sweep,
    ))
}

/// Headline numbers for one condition. Times are in ns; fields comparing
/// against the reference are `None` for the reference itself or when no
/// reference was run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub label: RunLabel,
    pub config_digest: String,
    pub n_shots: usize,
    pub paired: bool,
    /// Smallest mean inseparability over the delay grid and where it sits.
    pub insep_min: f64,
    pub insep_min_sem: f64,
    pub insep_min_delay_ns: f64,
    pub insep_at_zero: Option<f64>,
    pub mi_peak_bits: f64,
    pub mi_peak_sem_bits: f64,
    pub mi_peak_delay_ns: f64,
    pub mi_peak_delay_sem_ns: f64,
    /// Half-maximum width of the mean cross-correlation.
    pub xcorr_fwhm_ns: Option<f64>,
    /// Mean refined cross-correlation peak over trials.
    pub xcorr_peak_ns: f64,
    pub xcorr_peak_sem_ns: f64,
    /// Cross-correlation peak advance against the reference from per-trial
    /// discrete peaks (one-sample histogram bins) and refined peaks.
    /// Negative means earlier.
    pub peak_advance_ns: Option<f64>,
    pub peak_advance_sem_ns: Option<f64>,
    pub peak_advance_refined_ns: Option<f64>,
    pub peak_advance_refined_sem_ns: Option<f64>,
    pub fractional_advance: Option<f64>,
    pub insep_min_advance_ns: Option<f64>,
    pub insep_min_advance_sem_ns: Option<f64>,
    pub mi_peak_shift_ns: Option<f64>,
    pub mi_peak_shift_sem_ns: Option<f64>,
    /// Half-maximum crossings of this condition's own MI curve.
    pub leading_edge_ns: Option<f64>,
    pub leading_edge_unc_ns: Option<f64>,
    pub trailing_edge_ns: Option<f64>,
    pub trailing_edge_unc_ns: Option<f64>,
    pub fwhm_ns: Option<f64>,
    pub fwhm_unc_ns: Option<f64>,
    /// Crossings of half the reference MI peak.
    pub leading_edge_ref_level_ns: Option<f64>,
    pub leading_edge_ref_level_unc_ns: Option<f64>,
    pub trailing_edge_ref_level_ns: Option<f64>,
    pub trailing_edge_ref_level_unc_ns: Option<f64>,
    /// Own half-max edge shifts against the reference, and each shift over
    /// its propagated uncertainty.
    pub leading_edge_shift_ns: Option<f64>,
    pub leading_edge_shift_sigma: Option<f64>,
    pub trailing_edge_shift_ns: Option<f64>,
    pub trailing_edge_shift_sigma: Option<f64>,
    pub fwhm_change_ns: Option<f64>,
    pub fwhm_change_sigma: Option<f64>,
    /// Delays where the pooled covariance failed the physicality check.
    pub mi_flagged_delays: usize,
}

const NS: f64 = 1e9;

fn peak_error(what: &str, label: RunLabel) -> Error {
    Error::Analysis(format!("{label}: {what} has no interior extremum on the delay grid"))
}

/// Half-maximum crossings, or `None` (with a warning) when the delay grid is
/// too narrow to contain them.
fn half_max_edges(label: RunLabel, what: &str, edges: Result<EdgeTiming>) -> Option<EdgeTiming> {
    edges
        .map_err(|e| warn!("{label}: no {what} half-maximum crossings: {e}"))
        .ok()
}

pub fn summarize(output: &RunOutput) -> Result<Vec<ConditionSummary>> {
    let reference = output.reference();
    let ref_mi_peak = match reference {
        Some(r) => Some(
            r.result
                .mi_maximum()
                .ok_or_else(|| peak_error("mutual information", r.config.label))?,
        ),
        None => None,
    };
    let ref_edges = reference.and_then(|r| {
        half_max_edges(
            r.config.label,
            "mutual information",
            r.result.mi_edges(EdgeLevel::default()),
        )
    });
    let ref_fwhm_xc = reference
        .and_then(|r| {
            half_max_edges(
                r.config.label,
                "cross-correlation",
                r.result.xcorr_edges(EdgeLevel::default()),
            )
        })
        .map(|e| e.width_s());
    output
        .conditions
        .iter()
        .map(|c| {
            let label = c.config.label;
            let r = &c.result;
            let insep = r
                .inseparability_minimum()
                .ok_or_else(|| peak_error("inseparability", label))?;
            let mi = r.mi_maximum().ok_or_else(|| peak_error("mutual information", label))?;
            let edges = half_max_edges(label, "mutual information", r.mi_edges(EdgeLevel::default()));
            let xc_edges = half_max_edges(label, "cross-correlation", r.xcorr_edges(EdgeLevel::default()));
            let xc_peaks = r.xcorr_peaks.refined();
            let zero = r.lags.index_of(0);
            let compared = reference.filter(|rf| rf.config.label != label);
            let mut s = ConditionSummary {
                label,
                config_digest: c.config.digest(),
                n_shots: r.n_shots,
                paired: output.paired,
                insep_min: insep.value,
                insep_min_sem: r.inseparability[insep.index].sem,
                insep_min_delay_ns: insep.discrete_s * NS,
                insep_at_zero: zero.map(|i| r.inseparability[i].mean),
                mi_peak_bits: r.mi_bits[mi.index].mean,
                mi_peak_sem_bits: r.mi_bits[mi.index].sem,
                mi_peak_delay_ns: mi.refined_s * NS,
                mi_peak_delay_sem_ns: r.mi_peak_sem_s() * NS,
                xcorr_fwhm_ns: xc_edges.map(|e| e.width_s() * NS),
                xcorr_peak_ns: xc_peaks.mean * NS,
                xcorr_peak_sem_ns: xc_peaks.sem * NS,
                peak_advance_ns: None,
                peak_advance_sem_ns: None,
                peak_advance_refined_ns: None,
                peak_advance_refined_sem_ns: None,
                fractional_advance: None,
                insep_min_advance_ns: None,
                insep_min_advance_sem_ns: None,
                mi_peak_shift_ns: None,
                mi_peak_shift_sem_ns: None,
                leading_edge_ns: edges.map(|e| e.leading.time_s * NS),
                leading_edge_unc_ns: edges.map(|e| e.leading.uncertainty_s * NS),
                trailing_edge_ns: edges.map(|e| e.trailing.time_s * NS),
                trailing_edge_unc_ns: edges.map(|e| e.trailing.uncertainty_s * NS),
                fwhm_ns: edges.map(|e| e.width_s() * NS),
                fwhm_unc_ns: edges.map(|e| e.width_uncertainty_s() * NS),
                leading_edge_ref_level_ns: None,
                leading_edge_ref_level_unc_ns: None,
                trailing_edge_ref_level_ns: None,
                trailing_edge_ref_level_unc_ns: None,
                leading_edge_shift_ns: None,
                leading_edge_shift_sigma: None,
                trailing_edge_shift_ns: None,
                trailing_edge_shift_sigma: None,
                fwhm_change_ns: None,
                fwhm_change_sigma: None,
                mi_flagged_delays: r.mi_flagged_count(),
            };
            if let (Some(rf), Some(rp)) = (compared, ref_mi_peak) {
                let adv = peak_advance_from_sets(&rf.result.xcorr_peaks, &r.xcorr_peaks, output.paired)?;
                s.peak_advance_ns = Some(adv.advance_s * NS);
                s.peak_advance_sem_ns = Some(adv.sem_s * NS);
                s.peak_advance_refined_ns = Some(adv.refined_advance_s * NS);
                s.peak_advance_refined_sem_ns = Some(adv.refined_sem_s * NS);
                s.fractional_advance = ref_fwhm_xc.map(|w| adv.advance_s / w);
                let ins = peak_advance_from_sets(&rf.result.insep_minima, &r.insep_minima, output.paired)?;
                s.insep_min_advance_ns = Some(ins.advance_s * NS);
                s.insep_min_advance_sem_ns = Some(ins.sem_s * NS);
                let shift = mi_peak_shift(&rf.result, r, output.paired)?;
                s.mi_peak_shift_ns = Some(shift.shift_s * NS);
                s.mi_peak_shift_sem_ns = Some(shift.sem_s * NS);
                let level = EdgeLevel::Absolute(0.5 * rf.result.mi_bits[rp.index].mean);
                match r.mi_edges(level) {
                    Ok(e) => {
                        s.leading_edge_ref_level_ns = Some(e.leading.time_s * NS);
                        s.leading_edge_ref_level_unc_ns = Some(e.leading.uncertainty_s * NS);
                        s.trailing_edge_ref_level_ns = Some(e.trailing.time_s * NS);
                        s.trailing_edge_ref_level_unc_ns = Some(e.trailing.uncertainty_s * NS);
                    }
                    Err(e) => warn!("{label}: no crossing at half the reference peak: {e}"),
                }
                let sigma = |d: f64, a: f64, b: f64| d / a.hypot(b);
                let (Some(edges), Some(re)) = (edges, ref_edges) else {
                    return Ok(s);
                };
                let dl = edges.leading.time_s - re.leading.time_s;
                let dt = edges.trailing.time_s - re.trailing.time_s;
                let dw = edges.width_s() - re.width_s();
                s.leading_edge_shift_ns = Some(dl * NS);
                s.leading_edge_shift_sigma = Some(sigma(dl, edges.leading.uncertainty_s, re.leading.uncertainty_s));
                s.trailing_edge_shift_ns = Some(dt * NS);
                s.trailing_edge_shift_sigma = Some(sigma(dt, edges.trailing.uncertainty_s, re.trailing.uncertainty_s));
                s.fwhm_change_ns = Some(dw * NS);
                s.fwhm_change_sigma = Some(sigma(dw, edges.width_uncertainty_s(), re.width_uncertainty_s()));
            }
            Ok(s)
        })
        .collect()
}
