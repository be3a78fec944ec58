mod common;

use proptest::prelude::*;
use twinbeam::dispersion::*;
use twinbeam::io::config::{preset, RunLabel};

use common::lorentz;

fn single_line(center: f64, width: f64, peak: f64) -> (LorentzianLine, MediumResponse) {
    let grid = FrequencyGrid::spanning(-200e6, 200e6, 10e3).unwrap();
    let line = LorentzianLine::new(center, width, peak).unwrap();
    let resp = kramers_kronig_phase(&synth_gain_profile(&[line], &grid).unwrap()).unwrap();
    (line, resp)
}

#[test]
fn single_line_phase_matches_analytic() {
    let (line, resp) = single_line(0.0, 1e6, 0.2);
    let pts = resp.grid().points();
    let exact: Vec<f64> = pts.iter().map(|&f| lorentz::phase(&line, f)).collect();
    let peak = exact.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    let err = resp
        .phase()
        .iter()
        .zip(&exact)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err <= 0.01 * peak, "max phase error {err:e} vs peak {peak:e}");
}

#[test]
fn single_line_group_delay_sign_pattern() {
    let (line, resp) = single_line(0.0, 1e6, 0.2);
    let at = |f: f64| {
        let i = ((f - resp.grid().start_hz) / resp.grid().step_hz).round() as usize;
        resp.group_delay()[i]
    };
    let centre = at(0.0);
    assert!(centre > 0.0, "gain line must delay at line centre, got {centre}");
    assert!((centre - lorentz::group_delay(&line, 0.0)).abs() <= 0.01 * centre);
    // τ changes sign where x² = γγ'
    let cross = lorentz::sign_change(&line);
    for x in [1.5 * cross, 3.0 * cross, 10.0 * cross] {
        assert!(at(x) < 0.0 && at(-x) < 0.0, "wing at {x} Hz should advance");
    }
}

#[test]
fn causality_leakage_is_small() {
    let (_, resp) = single_line(0.0, 1e6, 0.2);
    let leak = causality_leakage(&resp);
    assert!(leak <= 0.01, "leakage {leak}");
    let fast = preset(RunLabel::Fast);
    let leak = causality_leakage(&fast.medium_response().unwrap().unwrap());
    assert!(leak <= 0.01, "fast preset leakage {leak}");
}

#[test]
fn doublet_advances_between_lines() {
    let grid = FrequencyGrid::spanning(-100e6, 100e6, 10e3).unwrap();
    let lines = [
        LorentzianLine::new(-8e6, 1.5e6, 1.5).unwrap(),
        LorentzianLine::new(8e6, 1.5e6, 1.5).unwrap(),
    ];
    let resp = kramers_kronig_phase(&synth_gain_profile(&lines, &grid).unwrap()).unwrap();
    assert!(group_delay_in_band(&resp, -1e6, 1e6).unwrap() < 0.0);
    // gain-weighted mean of a response built from an even profile is odd-free
    let mid = resp.grid().len / 2;
    let gd = resp.group_delay();
    for k in [1, 10, 100] {
        assert!((gd[mid + k] - gd[mid - k]).abs() <= 1e-6 * gd[mid].abs().max(1e-15));
    }
}

#[test]
fn fast_preset_is_calibrated() {
    let cfg = preset(RunLabel::Fast);
    let resp = cfg.medium_response().unwrap().unwrap();
    let (lo, hi) = cfg.analysis.band_hz;
    let off = cfg.medium.detection_offset_hz;
    let tau = group_delay_in_band(&resp, off + lo, off + hi).unwrap();
    assert!((tau + 3.7e-9).abs() < 1e-12, "band-averaged delay {tau:e}");
    let g = transfer_at(&resp, off + 1.05e6).unwrap().amplitude.powi(2);
    assert!((g - 1.1).abs() < 1e-3, "gain at band centre {g}");
}

#[test]
fn band_delay_converges_with_grid_density() {
    for label in [RunLabel::Fast, RunLabel::Slow] {
        let mut cfg = preset(label);
        let (lo, hi) = cfg.analysis.band_hz;
        let off = cfg.medium.detection_offset_hz;
        let coarse = group_delay_in_band(&cfg.medium_response().unwrap().unwrap(), off + lo, off + hi).unwrap();
        cfg.medium.grid.step_hz /= 2.0;
        let fine = group_delay_in_band(&cfg.medium_response().unwrap().unwrap(), off + lo, off + hi).unwrap();
        assert!(
            (fine - coarse).abs() < 0.005 * coarse.abs(),
            "{label}: {coarse:e} -> {fine:e}"
        );
    }
}

#[test]
fn slow_preset_delays() {
    let cfg = preset(RunLabel::Slow);
    let resp = cfg.medium_response().unwrap().unwrap();
    let (lo, hi) = cfg.analysis.band_hz;
    let off = cfg.medium.detection_offset_hz;
    assert!(group_delay_in_band(&resp, off + lo, off + hi).unwrap() > 0.0);
    let g = transfer_at(&resp, 0.0).unwrap().amplitude.powi(2);
    assert!((g - 1.2).abs() < 1e-9, "line-centre gain {g}");
}

#[test]
fn flat_unit_gain_has_no_phase() {
    let grid = FrequencyGrid::spanning(-10e6, 10e6, 10e3).unwrap();
    let profile = GainProfile::new(grid, vec![1.0; grid.len]).unwrap();
    let resp = kramers_kronig_phase(&profile).unwrap();
    assert!(resp.is_identity());
    assert!(resp.phase().iter().all(|&p| p == 0.0));
}

#[test]
fn gain_not_settled_at_edges_is_rejected() {
    let grid = FrequencyGrid::spanning(-2e6, 2e6, 10e3).unwrap();
    let line = LorentzianLine::new(0.0, 1e6, 0.5).unwrap();
    let profile = synth_gain_profile(&[line], &grid).unwrap();
    assert!(matches!(
        kramers_kronig_phase(&profile),
        Err(twinbeam::Error::EdgeNotSettled { .. })
    ));
}

#[test]
fn transfer_outside_grid_is_an_error() {
    let (_, resp) = single_line(0.0, 1e6, 0.2);
    assert!(matches!(transfer_at(&resp, 250e6), Err(twinbeam::Error::OutOfGrid(_))));
    assert!(group_delay_in_band(&resp, 150e6, 250e6).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kk_phase_tracks_analytic_line(width in 0.3e6..3e6f64, peak in 0.02..2.0f64, centre in -5e6..5e6f64) {
        let (line, resp) = single_line(centre, width, peak);
        let pts = resp.grid().points();
        let exact: Vec<f64> = pts.iter().map(|&f| lorentz::phase(&line, f)).collect();
        let max = exact.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
        let err = resp.phase().iter().zip(&exact).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err <= 0.01 * max, "err {err:e} peak {max:e}");
        prop_assert!(transfer_at(&resp, centre).unwrap().noise_coupling > 0.0);
    }

    #[test]
    fn noise_coupling_closes_the_channel(width in 0.3e6..3e6f64, peak in 0.02..2.0f64, f in -50e6..50e6f64) {
        let (_, resp) = single_line(0.0, width, peak);
        let t = transfer_at(&resp, f).unwrap();
        prop_assert!((t.amplitude * t.amplitude - t.noise_coupling - 1.0).abs() < 1e-9);
    }
}
