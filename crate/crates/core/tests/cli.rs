use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use twinbeam::io::bundle::BUNDLE_FILE;
use twinbeam::io::csv::{read_table, THEORY_COLUMNS};
use twinbeam::io::manifest::{read_run_manifest, read_shot};

fn twinbeam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinbeam"))
        .args(args)
        .current_dir(dir)
        .env("TBL_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = twinbeam(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = twinbeam(dir, args);
    assert_eq!(out.status.code(), Some(1), "{args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

const SMALL: [&str; 4] = ["--trials", "3", "--length", "8192"];

fn simulate(dir: &Path, out: &str, extra: &[&str]) {
    let mut args = vec!["simulate", "--out", out];
    args.extend(SMALL);
    args.extend(extra);
    if !extra.contains(&"--seed") {
        args.extend(["--seed", "11"]);
    }
    ok(dir, &args);
}

#[test]
fn simulate_is_deterministic_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "a", &["--jobs", "1"]);
    simulate(tmp.path(), "b", &["--jobs", "3"]);
    let ma = read_run_manifest(&tmp.path().join("a")).unwrap();
    let mb = read_run_manifest(&tmp.path().join("b")).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(ma.shots.len(), 3);
    for name in &ma.shots {
        let (sa, _) = read_shot(&tmp.path().join("a").join(name)).unwrap();
        let (sb, _) = read_shot(&tmp.path().join("b").join(name)).unwrap();
        assert_eq!(sa.probe_x, sb.probe_x);
        assert_eq!(sa.conj_y, sb.conj_y);
    }
    simulate(tmp.path(), "c", &["--seed", "12"]);
    assert_ne!(
        read_run_manifest(&tmp.path().join("c")).unwrap().config_digest,
        ma.config_digest
    );
}

#[test]
fn occupied_output_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "run", &[]);
    let err = fails(
        tmp.path(),
        &["simulate", "--out", "run", "--trials", "2", "--length", "4096"],
    );
    assert!(err.contains("--force"), "{err}");
    ok(
        tmp.path(),
        &[
            "simulate", "--out", "run", "--trials", "2", "--length", "4096", "--force",
        ],
    );
    assert_eq!(read_run_manifest(&tmp.path().join("run")).unwrap().shots.len(), 2);
    assert_eq!(
        fs::read_dir(tmp.path().join("run/shots")).unwrap().count(),
        2,
        "stale shots removed"
    );
}

#[test]
fn propagate_sweep_report_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "ref", &[]);
    let fast = ok(d, &["config", "--preset", "fast"]);
    fs::write(d.join("fast.json"), fast).unwrap();
    ok(
        d,
        &["propagate", "--input", "ref", "--config", "fast.json", "--out", "fast"],
    );
    let m = read_run_manifest(&d.join("fast")).unwrap();
    assert_eq!(
        m.parent_digest,
        Some(read_run_manifest(&d.join("ref")).unwrap().config_digest)
    );

    let err = fails(
        d,
        &[
            "propagate",
            "--input",
            "fast",
            "--config",
            "fast.json",
            "--out",
            "again",
        ],
    );
    assert!(err.contains("already went through a medium"), "{err}");

    let sweep = [
        "sweep",
        "--reference",
        "ref",
        "--fast",
        "fast",
        "--delay-min",
        "-100",
        "--delay-max",
        "100",
        "--delay-step",
        "2",
    ];
    let mut args = sweep.to_vec();
    args.extend(["--out", "res"]);
    let stdout = ok(d, &args);
    assert!(stdout.contains("reference:") && stdout.contains("fast:"), "{stdout}");
    for f in [
        "summary.json",
        "per_shot.csv",
        "sweep_reference.csv",
        "sweep_fast.csv",
        "fig3.svg",
        "fig4.svg",
        BUNDLE_FILE,
    ] {
        assert!(d.join("res").join(f).exists(), "{f} missing");
    }
    ok(d, &["verify", "--dir", "res"]);

    // figures regenerate byte-identically from the CSVs
    let fig = fs::read(d.join("res/fig3.svg")).unwrap();
    ok(d, &["report", "--dir", "res"]);
    assert_eq!(fs::read(d.join("res/fig3.svg")).unwrap(), fig);

    // a rerun reproduces the summary exactly
    let mut args = sweep.to_vec();
    args.extend(["--out", "res2", "--jobs", "1"]);
    ok(d, &args);
    assert_eq!(
        fs::read(d.join("res/summary.json")).unwrap(),
        fs::read(d.join("res2/summary.json")).unwrap()
    );

    let mut csv = fs::read_to_string(d.join("res/sweep_fast.csv")).unwrap();
    csv.push('\n');
    fs::write(d.join("res/sweep_fast.csv"), csv).unwrap();
    let err = fails(d, &["verify", "--dir", "res"]);
    assert!(err.contains("sweep_fast.csv"), "{err}");

    let err = fails(d, &["sweep", "--reference", "ref", "--fast", "ref", "--out", "dup"]);
    assert!(err.contains("only once"), "{err}");
    assert!(!d.join("dup").exists());
}

#[test]
fn preset_sweep_runs_without_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec![
        "sweep",
        "--presets",
        "reference,slow",
        "--out",
        "res",
        "--delay-min",
        "-50",
        "--delay-max",
        "50",
    ];
    args.extend(SMALL);
    let stdout = ok(tmp.path(), &args);
    assert!(stdout.contains("slow:"), "{stdout}");
    assert!(tmp.path().join("res/sweep_slow.csv").exists());
    assert!(!tmp.path().join("res/sweep_fast.csv").exists());
}

#[test]
fn kk_reports_the_fast_preset_delay() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("fast.json"), ok(d, &["config", "--preset", "fast"])).unwrap();
    let stdout = ok(d, &["kk", "--config", "fast.json", "--out", "kk"]);
    assert!(stdout.contains("-3.7000 ns"), "{stdout}");
    for f in ["gain.csv", "response.csv", "fig1c.svg"] {
        assert!(d.join("kk").join(f).exists(), "{f} missing");
    }
    // a flat unit gain has no delay
    let flat: String = std::iter::once("freq_hz,gain".to_string())
        .chain((0..2001).map(|i| format!("{},1", -10e6 + i as f64 * 1e4)))
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(d.join("flat.csv"), flat).unwrap();
    let stdout = ok(d, &["kk", "--gain", "flat.csv", "--out", "flat"]);
    assert!(
        stdout.contains("+0.0000 ns") || stdout.contains("-0.0000 ns"),
        "{stdout}"
    );

    fs::write(d.join("bad.csv"), "freq_hz,gain\n0,1\n1,1\n3,1\n").unwrap();
    let err = fails(d, &["kk", "--gain", "bad.csv", "--out", "bad"]);
    assert!(err.contains("bad.csv"), "{err}");
    let err = fails(d, &["kk", "--config", "fast.json", "--band", "1,2,3", "--out", "band"]);
    assert!(err.contains("band"), "{err}");
    let err = fails(d, &["kk", "--out", "nothing"]);
    assert!(err.contains("--gain"), "{err}");
}

#[test]
fn theory_curves_cross_two_at_the_breaking_gain() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let stdout = ok(
        d,
        &[
            "theory-curves",
            "--r",
            "0.34657359027997264",
            "--gain-step",
            "0.01",
            "--out",
            "th",
        ],
    );
    assert!(stdout.contains("G* = 1.6285"), "{stdout}");
    let t = read_table(&d.join("th/theory.csv"), &THEORY_COLUMNS).unwrap();
    let mi = t.column("mi_bits").unwrap();
    assert!(mi.windows(2).all(|w| w[1] < w[0]));
    assert!(d.join("th/figS4.svg").exists());

    fails(d, &["theory-curves", "--r-db", "1", "--out", "pos"]);
    fails(d, &["theory-curves", "--gain-min", "0.5", "--out", "low"]);
}

#[test]
fn config_prints_a_loadable_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = twinbeam(d, &["config", "--preset", "slow", "--trials", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let digest = String::from_utf8(out.stderr).unwrap();
    assert!(digest.starts_with("digest "), "{digest}");
    fs::write(d.join("slow.json"), &text).unwrap();
    let again = twinbeam(d, &["config", "--config", "slow.json"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    assert_eq!(String::from_utf8(again.stderr).unwrap(), digest);

    fs::write(d.join("bad.json"), r#"{"label":"slow","acquisition":{"trials":0}}"#).unwrap();
    let err = fails(d, &["config", "--config", "bad.json"]);
    assert!(err.contains("acquisition.trials"), "{err}");
    let err = fails(d, &["simulate", "--config", "missing.json", "--out", "x"]);
    assert!(err.contains("missing.json"), "{err}");
    assert!(!d.join("x").exists());
}
