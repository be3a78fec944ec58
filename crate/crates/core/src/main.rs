use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use twinbeam::dispersion::{group_delay_in_band, kramers_kronig_phase, synth_gain_profile, MediumResponse};
use twinbeam::gaussian::db_from_r;
use twinbeam::io::bundle::{ResultBundle, TOOL_VERSION};
use twinbeam::io::config::{load_config, preset, RunConfig, RunLabel};
use twinbeam::io::csv::{read_profile, write_profile, write_response, write_table};
use twinbeam::io::manifest::{
    read_run_manifest, read_shot, shot_dir_name, write_json, write_shot, RunManifest, RUN_MANIFEST, SHOTS_DIR,
    SHOT_NOISE_DIR,
};
use twinbeam::io::trace::{write_atomic, write_trace};
use twinbeam::pipeline::{
    apply_medium, default_jobs, run_from_dirs, run_simulated, shot_noise_traces, source_shot, summarize, thread_pool,
    Condition, ConditionSummary, RunDir, RunOutput, CONFIG_FILE,
};
use twinbeam::report::{self, render_all, theory_table, RESPONSE_FILE, THEORY_FILE};
use twinbeam::{Error, Result};

/// Exit status when outputs were written but a covariance estimate failed
/// the physicality check.
const EXIT_UNPHYSICAL: u8 = 3;

/// Two-mode squeezed light through fast- and slow-light gain media:
/// simulation, propagation and delay-resolved correlation analysis.
///
/// Set TBL_LOG (error, warn, info, debug, trace) to change verbosity.
#[derive(Parser, Debug)]
#[command(name = "twinbeam", version, about, long_about = None)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Run configuration (JSON). Defaults to the shipped reference preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// RNG seed (overrides acquisition.seed).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Number of shots (overrides acquisition.trials).
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Samples per trace (overrides acquisition.length).
    #[arg(long, global = true, value_name = "N")]
    length: Option<usize>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// First delay of the sweep in ns.
    #[arg(long, global = true, value_name = "NS", allow_negative_numbers = true)]
    delay_min: Option<f64>,
    /// Last delay of the sweep in ns.
    #[arg(long, global = true, value_name = "NS", allow_negative_numbers = true)]
    delay_max: Option<f64>,
    /// Delay step in ns; must be a multiple of the sample period.
    #[arg(long, global = true, value_name = "NS")]
    delay_step: Option<f64>,
    /// Overwrite an existing output directory.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize shots (and send them through the configured medium, if
    /// any) into a run directory.
    Simulate,
    /// Send the shots of a medium-free run through the medium of --config.
    Propagate {
        /// Run directory written by `simulate` with a reference config.
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
    },
    /// Delay sweep of one run directory.
    Analyze {
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
    },
    /// Delay sweeps of up to three conditions, with advances and edge
    /// timing against the reference.
    Sweep {
        #[arg(long, value_name = "DIR")]
        reference: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        fast: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        slow: Option<PathBuf>,
        /// Simulate the named presets in memory instead of reading run
        /// directories (comma separated: reference,fast,slow).
        #[arg(long, value_name = "LABELS", value_delimiter = ',', num_args = 0..)]
        presets: Option<Vec<RunLabel>>,
    },
    /// Kramers-Kronig phase and group delay of a gain profile.
    Kk {
        /// Gain profile CSV (freq_hz, gain). Without it the lines of
        /// --config are used.
        #[arg(long, value_name = "CSV")]
        gain: Option<PathBuf>,
        /// Band for the reported mean group delay, in detection Hz.
        #[arg(long, value_name = "LO,HI", value_delimiter = ',', allow_negative_numbers = true)]
        band: Option<Vec<f64>>,
    },
    /// Inseparability and mutual information versus gain.
    TheoryCurves {
        /// Source squeezing levels in dB (comma separated, each <= 0).
        #[arg(
            long,
            value_name = "DB",
            value_delimiter = ',',
            allow_negative_numbers = true,
            default_value = "-1,-2,-3,-4,-6"
        )]
        r_db: Vec<f64>,
        /// Squeezing parameters instead of dB levels (0.34657 squeezes the
        /// variance to exactly one half).
        #[arg(long, value_name = "R", value_delimiter = ',', conflicts_with = "r_db")]
        r: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        gain_min: f64,
        #[arg(long, default_value_t = 3.0)]
        gain_max: f64,
        #[arg(long, default_value_t = 0.05)]
        gain_step: f64,
    },
    /// Regenerate every figure in a directory from its CSV files.
    Report {
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
    },
    /// Check a result bundle's hashes and config digests.
    Verify {
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
    },
    /// Print the resolved configuration and its digest.
    Config {
        /// Print a shipped preset instead of --config.
        #[arg(long)]
        preset: Option<RunLabel>,
    },
}

impl Global {
    fn jobs(&self) -> Result<usize> {
        match self.jobs {
            Some(0) => Err(Error::invalid("jobs", "must be >= 1")),
            Some(n) => Ok(n),
            None => Ok(default_jobs()),
        }
    }

    fn base_config(&self) -> Result<RunConfig> {
        let cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => preset(RunLabel::Reference),
        };
        self.apply(cfg)
    }

    /// Command-line overrides on top of a loaded config.
    fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(s) = self.seed {
            cfg.acquisition.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.acquisition.trials = t;
        }
        if let Some(n) = self.length {
            cfg.acquisition.length = n;
        }
        self.apply_delays(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_delays(&self, cfg: &mut RunConfig) {
        let d = &mut cfg.analysis.delays_ns;
        if let Some(v) = self.delay_min {
            d.min_ns = v;
        }
        if let Some(v) = self.delay_max {
            d.max_ns = v;
        }
        if let Some(v) = self.delay_step {
            d.step_ns = v;
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::invalid("out", "this command needs --out DIR"))
    }

    /// Creates the output directory, refusing to reuse a non-empty one
    /// unless --force is given.
    fn prepare_out(&self) -> Result<&Path> {
        let out = self.out_dir()?;
        if out.exists() {
            let occupied = fs::read_dir(out).map_err(|e| Error::io(out, e))?.next().is_some();
            if occupied && !self.force {
                return Err(Error::invalid(
                    "out",
                    format!(
                        "{} already exists and is not empty (use --force to overwrite)",
                        out.display()
                    ),
                ));
            }
        }
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TBL_LOG", "info"))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(clean) => {
            if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_UNPHYSICAL)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

/// Returns `false` when outputs were written but physicality flags fired.
fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate => cmd_simulate(g),
        Command::Propagate { input } => cmd_propagate(g, input),
        Command::Analyze { input } => cmd_analyze(g, std::slice::from_ref(input), "analyze"),
        Command::Sweep {
            reference,
            fast,
            slow,
            presets,
        } => match presets {
            Some(labels) => cmd_sweep_presets(g, labels),
            None => {
                let dirs: Vec<PathBuf> = [reference, fast, slow].into_iter().flatten().cloned().collect();
                if dirs.is_empty() {
                    return Err(Error::invalid(
                        "sweep",
                        "give --reference/--fast/--slow run directories or --presets",
                    ));
                }
                cmd_analyze(g, &dirs, "sweep")
            }
        },
        Command::Kk { gain, band } => cmd_kk(g, gain.as_deref(), band.as_deref()),
        Command::TheoryCurves {
            r_db,
            r,
            gain_min,
            gain_max,
            gain_step,
        } => {
            let levels = match r {
                Some(rs) => rs
                    .iter()
                    .map(|&r| {
                        if r.is_finite() && r >= 0.0 {
                            Ok(db_from_r(r))
                        } else {
                            Err(Error::invalid("r", format!("expected a finite value >= 0, got {r}")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => r_db.clone(),
            };
            cmd_theory(g, &levels, *gain_min, *gain_max, *gain_step)
        }
        Command::Report { dir } => {
            let written = render_all(dir)?;
            if written.is_empty() {
                return Err(Error::invalid(
                    "dir",
                    format!("{} holds no sweep, theory or response tables", dir.display()),
                ));
            }
            for f in written {
                println!("{}", dir.join(f).display());
            }
            Ok(true)
        }
        Command::Verify { dir } => {
            ResultBundle::read(dir)?.verify(dir)?;
            println!("{}: bundle consistent", dir.display());
            Ok(true)
        }
        Command::Config { preset: p } => {
            let cfg = match p {
                Some(l) => g.apply(preset(*l))?,
                None => g.base_config()?,
            };
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            eprintln!("digest {}", cfg.digest());
            Ok(true)
        }
    }
}

fn clear_run_subdirs(out: &Path) -> Result<()> {
    for sub in [SHOTS_DIR, SHOT_NOISE_DIR] {
        let p = out.join(sub);
        if p.exists() {
            fs::remove_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}

fn write_config(path: &Path, cfg: &RunConfig) -> Result<()> {
    let mut text = serde_json::to_string_pretty(cfg)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn write_shot_noise(out: &Path, cfg: &RunConfig) -> Result<Vec<String>> {
    let dir = out.join(SHOT_NOISE_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    shot_noise_traces(cfg)?
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let name = format!("{SHOT_NOISE_DIR}/sn_{i:03}.tbtr");
            write_trace(&out.join(&name), t)?;
            Ok(name)
        })
        .collect()
}

fn cmd_simulate(g: &Global) -> Result<bool> {
    let cfg = g.base_config()?;
    let out = g.prepare_out()?;
    clear_run_subdirs(out)?;
    let condition = Condition::new(cfg.clone())?;
    let seed = cfg.acquisition.seed;
    info!(
        "{} shots ({}) into {}",
        cfg.acquisition.trials,
        cfg.label,
        out.display()
    );
    let shot_noise = write_shot_noise(out, &cfg)?;
    let pool = thread_pool(g.jobs()?)?;
    let mut shots: Vec<(u64, String)> = pool.install(|| {
        use rayon::prelude::*;
        (0..cfg.acquisition.trials as u64)
            .into_par_iter()
            .map(|i| -> Result<(u64, String)> {
                let (src, attempts, _) = source_shot(&cfg, i)?;
                let shot = apply_medium(&condition, &src)?;
                let name = format!("{SHOTS_DIR}/{}", shot_dir_name(i));
                write_shot(&out.join(&name), &shot, i, attempts, seed)?;
                Ok((i, name))
            })
            .collect::<Result<_>>()
    })?;
    shots.sort();
    write_config(&out.join(CONFIG_FILE), &cfg)?;
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        config_digest: cfg.digest(),
        parent_digest: None,
        source_digest: cfg.source_digest(),
        seed,
        shots: shots.into_iter().map(|(_, n)| n).collect(),
        shot_noise,
    };
    write_json(&out.join(RUN_MANIFEST), &manifest)?;
    println!(
        "{} shots written to {} (config {})",
        manifest.shots.len(),
        out.display(),
        manifest.config_digest
    );
    Ok(true)
}

fn cmd_propagate(g: &Global, input: &Path) -> Result<bool> {
    if g.config.is_none() {
        return Err(Error::invalid("config", "propagate needs --config with a medium"));
    }
    let cfg = g.base_config()?;
    if cfg.medium.lines.is_empty() {
        return Err(Error::config("medium.lines", "propagate needs at least one gain line"));
    }
    let src = RunDir::open(input)?;
    let src_manifest = read_run_manifest(input)?;
    if src.condition.response.is_some() {
        return Err(Error::invalid("input", "input run already went through a medium"));
    }
    // The shots were made with the input run's source settings; keep them.
    let mut cfg = cfg;
    cfg.source = src.condition.config.source;
    cfg.acquisition = src.condition.config.acquisition;
    cfg.analysis.trigger = src.condition.config.analysis.trigger;
    cfg.validate()?;
    let condition = Condition::new(cfg.clone())?;
    let out = g.prepare_out()?;
    clear_run_subdirs(out)?;
    let shot_noise = write_shot_noise_copy(out, &src)?;
    let pool = thread_pool(g.jobs()?)?;
    let mut shots: Vec<(u64, String)> = pool.install(|| {
        use rayon::prelude::*;
        src.shot_dirs
            .par_iter()
            .map(|dir| -> Result<(u64, String)> {
                let (shot, m) = read_shot(dir)?;
                let propagated = apply_medium(&condition, &shot)?;
                let name = format!("{SHOTS_DIR}/{}", shot_dir_name(m.shot_index));
                write_shot(&out.join(&name), &propagated, m.shot_index, m.attempts, m.seed)?;
                Ok((m.shot_index, name))
            })
            .collect::<Result<_>>()
    })?;
    shots.sort();
    write_config(&out.join(CONFIG_FILE), &cfg)?;
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        config_digest: cfg.digest(),
        parent_digest: Some(src_manifest.config_digest),
        source_digest: src_manifest.source_digest,
        seed: src_manifest.seed,
        shots: shots.into_iter().map(|(_, n)| n).collect(),
        shot_noise,
    };
    write_json(&out.join(RUN_MANIFEST), &manifest)?;
    println!(
        "{} shots propagated ({}) into {}",
        manifest.shots.len(),
        cfg.label,
        out.display()
    );
    Ok(true)
}

fn write_shot_noise_copy(out: &Path, src: &RunDir) -> Result<Vec<String>> {
    let dir = out.join(SHOT_NOISE_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    src.shot_noise
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let name = format!("{SHOT_NOISE_DIR}/sn_{i:03}.tbtr");
            write_trace(&out.join(&name), t)?;
            Ok(name)
        })
        .collect()
}

fn cmd_analyze(g: &Global, inputs: &[PathBuf], command: &str) -> Result<bool> {
    let mut dirs = Vec::with_capacity(inputs.len());
    for p in inputs {
        let mut d = RunDir::open(p)?;
        let mut cfg = d.condition.config.clone();
        g.apply_delays(&mut cfg);
        cfg.validate()?;
        d.condition = Condition::new(cfg)?;
        dirs.push(d);
    }
    let mut labels: Vec<RunLabel> = dirs.iter().map(|d| d.condition.label()).collect();
    labels.sort_by_key(|l| *l as u8);
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("runs", "each condition label may appear only once"));
    }
    let output = run_from_dirs(&dirs, g.jobs()?)?;
    finish(g, &output, command)
}

fn cmd_sweep_presets(g: &Global, labels: &[RunLabel]) -> Result<bool> {
    let labels: Vec<RunLabel> = if labels.is_empty() {
        RunLabel::ALL.to_vec()
    } else {
        labels.to_vec()
    };
    let base = match &g.config {
        Some(p) => Some(load_config(p)?),
        None => None,
    };
    let conditions = labels
        .iter()
        .map(|&l| {
            let mut cfg = preset(l);
            // Source, acquisition and analysis come from --config when given.
            if let Some(b) = &base {
                cfg.source = b.source;
                cfg.acquisition = b.acquisition;
                cfg.analysis = b.analysis;
            }
            Condition::new(g.apply(cfg)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let output = run_simulated(&conditions, g.jobs()?)?;
    finish(g, &output, "sweep --presets")
}

fn finish(g: &Global, output: &RunOutput, command: &str) -> Result<bool> {
    let summaries = summarize(output)?;
    let out = g.prepare_out()?;
    report::write_run(out, output, &summaries, command)?;
    for s in &summaries {
        print_summary(s);
    }
    println!("results in {}", out.display());
    let flagged: usize = summaries.iter().map(|s| s.mi_flagged_delays).sum();
    if flagged > 0 {
        warn!("{flagged} delay points failed the covariance physicality check");
    }
    Ok(flagged == 0)
}

fn print_summary(s: &ConditionSummary) {
    println!(
        "{:>9}: shots {}  min I {:.4} ± {:.4} at {:+.1} ns  MI peak {:.4} ± {:.4} bits at {:+.2} ± {:.2} ns  xcorr FWHM {:.1} ns",
        s.label.as_str(),
        s.n_shots,
        s.insep_min,
        s.insep_min_sem,
        s.insep_min_delay_ns,
        s.mi_peak_bits,
        s.mi_peak_sem_bits,
        s.mi_peak_delay_ns,
        s.mi_peak_delay_sem_ns,
        s.xcorr_fwhm_ns.unwrap_or(f64::NAN)
    );
    if let (Some(a), Some(e)) = (s.peak_advance_ns, s.peak_advance_sem_ns) {
        println!(
            "           xcorr peak shift {a:+.3} ± {e:.3} ns  MI peak shift {:+.3} ± {:.3} ns  MI edges {:+.2}/{:+.2} ns  FWHM change {:+.2} ns",
            s.mi_peak_shift_ns.unwrap_or(f64::NAN),
            s.mi_peak_shift_sem_ns.unwrap_or(f64::NAN),
            s.leading_edge_shift_ns.unwrap_or(f64::NAN),
            s.trailing_edge_shift_ns.unwrap_or(f64::NAN),
            s.fwhm_change_ns.unwrap_or(f64::NAN)
        );
    }
}

fn cmd_kk(g: &Global, gain: Option<&Path>, band: Option<&[f64]>) -> Result<bool> {
    let out = g.prepare_out()?;
    let cfg = g.base_config()?;
    let (lo, hi) = match band {
        Some([lo, hi]) => (*lo, *hi),
        Some(other) => {
            return Err(Error::invalid(
                "band",
                format!("expected LO,HI, got {} values", other.len()),
            ))
        }
        None => cfg.analysis.band_hz,
    };
    let (profile, offset) = match gain {
        Some(p) => (read_profile(p)?, 0.0),
        None => {
            if cfg.medium.lines.is_empty() {
                return Err(Error::invalid(
                    "gain",
                    "give --gain CSV or a --config with medium lines",
                ));
            }
            let p = synth_gain_profile(&cfg.medium.lines, &cfg.frequency_grid()?)?;
            write_profile(&out.join("gain.csv"), &p)?;
            (p, cfg.medium.detection_offset_hz)
        }
    };
    let resp: MediumResponse = kramers_kronig_phase(&profile)?;
    write_response(&out.join(RESPONSE_FILE), &resp)?;
    render_all(out)?;
    match group_delay_in_band(&resp, offset + lo, offset + hi) {
        Ok(tau) => println!("mean group delay over {lo}..{hi} Hz: {:+.4} ns", tau * 1e9),
        Err(e) => warn!("no band group delay: {e}"),
    }
    println!("response written to {}", out.join(RESPONSE_FILE).display());
    Ok(true)
}

fn cmd_theory(g: &Global, r_db: &[f64], gmin: f64, gmax: f64, step: f64) -> Result<bool> {
    if !(gmin >= 1.0 && gmax >= gmin && step > 0.0) {
        return Err(Error::invalid(
            "gain",
            "need 1 <= gain-min <= gain-max and gain-step > 0",
        ));
    }
    let n = ((gmax - gmin) / step + 1e-9).floor() as usize;
    let gains: Vec<f64> = (0..=n).map(|i| gmin + i as f64 * step).collect();
    let out = g.prepare_out()?;
    let table = theory_table(r_db, &gains)?;
    write_table(&out.join(THEORY_FILE), &table)?;
    render_all(out)?;
    let rs = table.column("r_db").unwrap_or_default();
    let gs = table.column("breaking_gain").unwrap_or_default();
    for (i, r) in rs.iter().enumerate() {
        if i == 0 || rs[i - 1] != *r {
            println!("r = {r} dB: entanglement lost at G* = {:.6}", gs[i]);
        }
    }
    println!("theory curves written to {}", out.display());
    Ok(true)
}
