//! Output files for a run and the figures drawn from them.
//!
//! Every figure is built from the CSV it sits next to, so `report` can
//! regenerate it byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::bundle::{BundleCondition, Provenance, ResultBundle, TOOL_VERSION};
use crate::io::config::RunLabel;
use crate::io::csv::{read_sweep, read_table, sweep_table, write_table, Table, RESPONSE_COLUMNS, THEORY_COLUMNS};
use crate::io::manifest::write_json;
use crate::io::trace::write_atomic;
use crate::pipeline::{ConditionSummary, RunOutput};
use crate::plot::{render, Panel, Series};

pub const SUMMARY_FILE: &str = "summary.json";
pub const PER_SHOT_FILE: &str = "per_shot.csv";
pub const FIG3_FILE: &str = "fig3.svg";
pub const FIG4_FILE: &str = "fig4.svg";
pub const FIGS4_FILE: &str = "figS4.svg";
pub const FIG1C_FILE: &str = "fig1c.svg";
pub const THEORY_FILE: &str = "theory.csv";
pub const RESPONSE_FILE: &str = "response.csv";

pub fn sweep_file(label: RunLabel) -> String {
    format!("sweep_{label}.csv")
}

pub fn config_file(label: RunLabel) -> String {
    format!("config_{label}.json")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tool_version: String,
    pub paired: bool,
    /// Units of the mutual-information columns.
    pub mi_units: String,
    pub xcorr_normalization: String,
    pub conditions: Vec<ConditionSummary>,
}

/// Per-shot scalars: trigger readings and, for each condition, the
/// refined cross-correlation peak and inseparability minimum.
pub fn per_shot_table(output: &RunOutput) -> Table {
    let mut headers = vec![
        "shot".to_string(),
        "attempts".into(),
        "triggered".into(),
        "squeezed_x_minus".into(),
        "trigger_x_minus_db".into(),
        "trigger_y_plus_db".into(),
    ];
    let shots = &output.shots;
    let mut columns = vec![
        shots.iter().map(|s| s.shot_index as f64).collect(),
        shots.iter().map(|s| s.attempts as f64).collect(),
        shots.iter().map(|s| if s.triggered { 1.0 } else { 0.0 }).collect(),
        shots
            .iter()
            .map(|s| {
                if s.squeezed_joint == crate::sim::JointQuadrature::XMinus {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
        shots.iter().map(|s| s.trigger_db[0]).collect(),
        shots.iter().map(|s| s.trigger_db[1]).collect::<Vec<f64>>(),
    ];
    for c in &output.conditions {
        let label = c.config.label;
        let r = &c.result;
        let pick = |set: &crate::analysis::PeakSet, refined: bool| -> Vec<f64> {
            set.trials
                .iter()
                .map(|t| t.map_or(f64::NAN, |(d, f)| if refined { f } else { d } * 1e9))
                .collect()
        };
        headers.push(format!("{label}_xcorr_peak_ns"));
        columns.push(pick(&r.xcorr_peaks, true));
        headers.push(format!("{label}_xcorr_peak_discrete_ns"));
        columns.push(pick(&r.xcorr_peaks, false));
        headers.push(format!("{label}_insep_min_ns"));
        columns.push(pick(&r.insep_minima, true));
    }
    let n = shots.len();
    for col in columns.iter_mut() {
        col.resize(n, f64::NAN);
    }
    Table { headers, columns }
}

/// Writes sweep CSVs, configs, the per-shot table, the summary, both delay
/// figures and the bundle index into `dir`.
pub fn write_run(
    dir: &Path,
    output: &RunOutput,
    summaries: &[ConditionSummary],
    command: &str,
) -> Result<ResultBundle> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<String> = Vec::new();
    let mut conditions = Vec::new();
    for c in &output.conditions {
        let label = c.config.label;
        let cfg_name = config_file(label);
        let mut text = serde_json::to_string_pretty(&c.config)?;
        text.push('\n');
        write_atomic(&dir.join(&cfg_name), text.as_bytes())?;
        let sweep_name = sweep_file(label);
        write_table(&dir.join(&sweep_name), &sweep_table(&c.result))?;
        conditions.push(BundleCondition {
            label,
            config_digest: c.config.digest(),
            config_file: cfg_name.clone(),
            sweep_file: sweep_name.clone(),
            n_shots: c.result.n_shots,
        });
        files.push(cfg_name);
        files.push(sweep_name);
    }
    write_table(&dir.join(PER_SHOT_FILE), &per_shot_table(output))?;
    let summary = RunSummary {
        tool_version: TOOL_VERSION.into(),
        paired: output.paired,
        mi_units: "bits".into(),
        xcorr_normalization: "global sqrt(sum f^2 * sum g^2) over the filter support".into(),
        conditions: summaries.to_vec(),
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    let figs = render_delay_figures(dir)?;
    files.extend([PER_SHOT_FILE.to_string(), SUMMARY_FILE.to_string()]);
    files.extend(figs.into_iter().map(str::to_string));
    let mut seeds: Vec<u64> = output.conditions.iter().map(|c| c.config.acquisition.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let mut bundle = ResultBundle {
        provenance: Provenance {
            tool_version: TOOL_VERSION.into(),
            command: command.into(),
            seeds,
        },
        paired: output.paired,
        conditions,
        summary_file: SUMMARY_FILE.into(),
        per_shot_file: PER_SHOT_FILE.into(),
        files: Default::default(),
    };
    bundle.hash_files(dir, files.iter().map(String::as_str))?;
    bundle.write(dir)?;
    Ok(bundle)
}

fn sweep_tables(dir: &Path) -> Result<Vec<(RunLabel, Table)>> {
    RunLabel::ALL
        .into_iter()
        .filter(|l| dir.join(sweep_file(*l)).exists())
        .map(|l| Ok((l, read_sweep(&dir.join(sweep_file(l)))?)))
        .collect()
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    t.column(name).map(<[f64]>::to_vec).unwrap_or_default()
}

pub fn fig3(tables: &[(RunLabel, Table)]) -> String {
    let mut xc = Panel::new(
        "Twin-beam cross-correlation",
        "delay (ns)",
        "normalized cross-correlation",
    );
    let mut ins = Panel::new("Inseparability", "delay (ns)", "I (shot-noise units)").hline(2.0, "separable bound");
    for (label, t) in tables {
        let d = column(t, "delay_ns");
        if t.column("xcorr_mean").is_some() {
            xc.series
                .push(Series::new(label.as_str(), d.clone(), column(t, "xcorr_mean")).with_err(column(t, "xcorr_sem")));
        }
        ins.series
            .push(Series::new(label.as_str(), d, column(t, "insep_mean")).with_err(column(t, "insep_sem")));
    }
    let panels = if xc.series.is_empty() { vec![ins] } else { vec![xc, ins] };
    render("Delay dependence of the twin-beam correlations", &panels)
}

pub fn fig4(tables: &[(RunLabel, Table)]) -> String {
    let mut mi = Panel::new("Mutual information", "delay (ns)", "I(p:c) (bits)");
    let mut sq = Panel::new("Joint-quadrature squeezing", "delay (ns)", "squeezing (dB)").hline(0.0, "shot noise");
    for (label, t) in tables {
        let d = column(t, "delay_ns");
        mi.series
            .push(Series::new(label.as_str(), d.clone(), column(t, "mi_bits_mean")).with_err(column(t, "mi_bits_sem")));
        sq.series
            .push(Series::new(label.as_str(), d, column(t, "sqz_db_mean")).with_err(column(t, "sqz_db_sem")));
    }
    render("Delay-dependent mutual information", &[mi, sq])
}

/// Rows of the theory table grouped by `r_db`, in file order.
fn theory_groups(t: &Table) -> Vec<(f64, Vec<usize>)> {
    let r = column(t, "r_db");
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &v) in r.iter().enumerate() {
        match groups.iter_mut().find(|(g, _)| *g == v) {
            Some((_, rows)) => rows.push(i),
            None => groups.push((v, vec![i])),
        }
    }
    groups
}

pub fn fig_s4(t: &Table) -> String {
    let g = column(t, "gain");
    let mi = column(t, "mi_bits");
    let ins = column(t, "inseparability");
    let mut a = Panel::new("Mutual information after gain", "gain G", "I(p:c) (bits)");
    let mut b = Panel::new("Inseparability after gain", "gain G", "I (shot-noise units)").hline(2.0, "separable bound");
    for (r_db, rows) in theory_groups(t) {
        let pick = |v: &[f64]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let name = format!("{r_db} dB");
        a.series.push(Series::new(name.clone(), pick(&g), pick(&mi)));
        b.series.push(Series::new(name, pick(&g), pick(&ins)));
    }
    render("Phase-insensitive gain on a two-mode squeezed state", &[a, b])
}

pub fn fig1c(t: &Table) -> String {
    let f = column(t, "freq_hz");
    let amp = column(t, "amplitude");
    let tau = column(t, "group_delay_s");
    let gain: Vec<f64> = amp.iter().map(|a| a * a).collect();
    let peak = gain.iter().fold(0.0f64, |m, g| m.max(g - 1.0));
    let reach = f
        .iter()
        .zip(&gain)
        .filter(|(_, g)| **g - 1.0 > 0.01 * peak)
        .fold(0.0f64, |m, (x, _)| m.max(x.abs()));
    let window = if peak > 0.0 { 2.5 * reach } else { f64::INFINITY };
    let keep: Vec<usize> = (0..f.len()).filter(|&i| f[i].abs() <= window).collect();
    let mhz: Vec<f64> = keep.iter().map(|&i| f[i] * 1e-6).collect();
    let mut a = Panel::new("Gain profile", "detuning (MHz)", "intensity gain G");
    a.series
        .push(Series::new("G", mhz.clone(), keep.iter().map(|&i| gain[i]).collect()));
    let mut b = Panel::new("Group delay", "detuning (MHz)", "group delay (ns)").hline(0.0, "");
    b.series
        .push(Series::new("tau_g", mhz, keep.iter().map(|&i| tau[i] * 1e9).collect()));
    render("Gain medium and its Kramers-Kronig dispersion", &[a, b])
}

/// Renders `fig3.svg` and `fig4.svg` from the sweep CSVs in `dir`.
pub fn render_delay_figures(dir: &Path) -> Result<Vec<&'static str>> {
    let tables = sweep_tables(dir)?;
    if tables.is_empty() {
        return Ok(Vec::new());
    }
    write_atomic(&dir.join(FIG3_FILE), fig3(&tables).as_bytes())?;
    write_atomic(&dir.join(FIG4_FILE), fig4(&tables).as_bytes())?;
    Ok(vec![FIG3_FILE, FIG4_FILE])
}

/// Regenerates every figure whose backing CSV exists in `dir`.
pub fn render_all(dir: &Path) -> Result<Vec<&'static str>> {
    let mut written = render_delay_figures(dir)?;
    let theory = dir.join(THEORY_FILE);
    if theory.exists() {
        let t = read_table(&theory, &THEORY_COLUMNS)?;
        write_atomic(&dir.join(FIGS4_FILE), fig_s4(&t).as_bytes())?;
        written.push(FIGS4_FILE);
    }
    let response = dir.join(RESPONSE_FILE);
    if response.exists() {
        let t = read_table(&response, &RESPONSE_COLUMNS)?;
        write_atomic(&dir.join(FIG1C_FILE), fig1c(&t).as_bytes())?;
        written.push(FIG1C_FILE);
    }
    Ok(written)
}

/// Inseparability and mutual information of an EPR state with gain `G` on
/// the conjugate, for every `(r_db, G)` pair, plus the breaking gain per row.
pub fn theory_table(r_db: &[f64], gains: &[f64]) -> Result<Table> {
    use crate::gaussian::{
        apply_phase_insensitive_gain, entanglement_breaking_gain, epr_covariance, inseparability, mutual_information,
        r_from_db, Mode,
    };
    let mut cols = vec![Vec::new(); THEORY_COLUMNS.len()];
    for &db in r_db {
        let r = r_from_db(db)?;
        let epr = epr_covariance(r)?;
        let g_star = entanglement_breaking_gain(r)?;
        for &g in gains {
            let cov = apply_phase_insensitive_gain(&epr, g, Mode::Conjugate)?;
            for (col, v) in cols
                .iter_mut()
                .zip([db, g, inseparability(&cov), mutual_information(&cov)?, g_star])
            {
                col.push(v);
            }
        }
    }
    Ok(Table::new(&THEORY_COLUMNS, cols))
}
