mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twinbeam::analysis::*;
use twinbeam::dispersion::{FrequencyGrid, MediumResponse};
use twinbeam::fft;
use twinbeam::gaussian::{apply_phase_insensitive_gain, epr_covariance, Mode, TwoModeCovariance};
use twinbeam::io::config::{RunConfig, RunLabel};
use twinbeam::pipeline::{run_simulated, Condition};
use twinbeam::sim::*;

use common::R_3DB;

const DT: f64 = 0.4e-9;

fn shots(r: f64, n: usize, count: u64, seed: u64) -> Vec<ExperimentShot> {
    let spec = SqueezingSpectrum {
        r,
        ..SqueezingSpectrum::default()
    };
    (0..count)
        .map(|i| {
            synthesize_shot(
                &spec,
                n,
                DT,
                seed,
                seed_tag(i, 0, StreamRole::Source),
                &TriggerSpec::default(),
            )
            .unwrap()
        })
        .collect()
}

fn shot_noise(n: usize, settings: &SweepSettings, seed: u64) -> ShotNoiseLevel {
    let traces: Vec<_> = (0..5)
        .map(|i| shot_noise_reference(n, DT, seed, seed_tag(1 << 40 | i, 0, StreamRole::ShotNoise)).unwrap())
        .collect();
    ShotNoiseLevel::from_traces(&traces, settings.band, settings.filter).unwrap()
}

fn direct_correlation(f: &[f64], g: &[f64], lag: i64) -> f64 {
    let n = f.len() as i64;
    (0..n)
        .filter(|m| (0..n).contains(&(m + lag)))
        .map(|m| f[m as usize] * g[(m + lag) as usize])
        .sum()
}

fn assert_within_sigma(estimate: &CovarianceEstimate, expected: &TwoModeCovariance, k: f64) {
    for i in 0..4 {
        for j in 0..4 {
            let (got, want, se) = (estimate.covariance.get(i, j), expected.get(i, j), estimate.sem[i][j]);
            assert!(
                (got - want).abs() <= k * se + 1e-12,
                "γ[{i}][{j}] = {got} vs {want} (se {se})"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fft_correlation_matches_direct_sum(n in 1usize..4096, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = cross_correlation(&f, &g).unwrap();
        let scale = (f.iter().map(|x| x * x).sum::<f64>() * g.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let step = (n / 64).max(1) as i64;
        let mut lag = -(n as i64 - 1);
        while lag < n as i64 {
            let d = direct_correlation(&f, &g, lag);
            prop_assert!((c.at(lag).unwrap() - d).abs() <= 1e-10 * scale, "lag {lag}");
            lag += step;
        }
    }

    #[test]
    fn shifted_copy_peaks_at_shift(n in 64usize..2048, k in -30i64..30, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n as i64).map(|m| if (0..n as i64).contains(&(m - k)) { f[(m - k) as usize] } else { 0.0 }).collect();
        prop_assert_eq!(normalized_cross_correlation(&f, &g).unwrap().argmax(), Some(k));
    }

    #[test]
    fn self_correlation_peaks_at_one(n in 1usize..2048, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = normalized_cross_correlation(&f, &f).unwrap();
        prop_assert!((c.at(0).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(c.values.iter().all(|v| *v <= 1.0 + 1e-12));
    }

    #[test]
    fn parseval(n in 2usize..5000, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq: f64 = fft::real_spectrum(&x).iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        prop_assert!((time - freq).abs() <= 1e-6 * time);
    }
}

#[test]
fn impulse_self_correlation() {
    let mut f = vec![0.0; 33];
    f[7] = 1.0;
    let c = normalized_cross_correlation(&f, &f).unwrap();
    assert_eq!(c.argmax(), Some(0));
    assert_eq!(c.at(0), Some(1.0));
    assert!(cross_correlation(&f, &f[..10]).is_err());
}

#[test]
fn synthesis_is_deterministic_per_tag() {
    let a = shots(R_3DB, 4096, 2, 9);
    let b = shots(R_3DB, 4096, 2, 9);
    assert_eq!(a[0].probe_x.samples, b[0].probe_x.samples);
    assert_ne!(a[0].probe_x.samples, a[1].probe_x.samples);
    assert_ne!(a[0].probe_x.samples, shots(R_3DB, 4096, 1, 10)[0].probe_x.samples);
}

#[test]
fn joint_quadrature_powers() {
    let n = 1 << 18;
    let band = NoiseBand::default();
    let sn = shot_noise_reference(n, DT, 3, seed_tag(1 << 40, 0, StreamRole::ShotNoise)).unwrap();
    let bins = band.bins(n, DT).unwrap().count() as f64;
    let sigma = (2.0 / bins).sqrt();
    let shot = &shots(R_3DB, n, 1, 3)[0];
    let xm = band_power(&joint_trace(shot, JointQuadrature::XMinus).unwrap(), &band, &sn).unwrap();
    let yp = band_power(&joint_trace(shot, JointQuadrature::YPlus).unwrap(), &band, &sn).unwrap();
    assert!((xm - 0.5).abs() <= 3.0 * sigma * 0.5, "X- power {xm}");
    assert!((yp - 0.5).abs() <= 3.0 * sigma * 0.5, "Y+ power {yp}");
    let vacuum = &shots(0.0, n, 1, 4)[0];
    let v = band_power(&joint_trace(vacuum, JointQuadrature::XMinus).unwrap(), &band, &sn).unwrap();
    assert!((v - 1.0).abs() <= 3.0 * sigma, "vacuum joint power {v}");
    assert_eq!(band_power(&sn, &band, &sn).unwrap(), 1.0);
}

#[test]
fn covariance_estimate_matches_generator() {
    let n = 1 << 16;
    let settings = SweepSettings::default();
    let sn = shot_noise(n, &settings, 5);
    let source = shots(R_3DB, n, 100, 5);
    let est = estimate_covariance(&source, 0.0, &settings, &sn).unwrap();
    assert_within_sigma(&est, &epr_covariance(R_3DB).unwrap(), 3.0);
    assert!(!est.unphysical);

    let vacuum = shots(0.0, n, 100, 6);
    let est = estimate_covariance(&vacuum, 0.0, &settings, &sn).unwrap();
    assert_within_sigma(&est, &TwoModeCovariance::vacuum(), 3.0);

    // flat G = 1.1 on the conjugate: diag 1.25 / 1.475, cross ±0.75√1.1
    let grid = FrequencyGrid::spanning(-10e6, 10e6, 10e3).unwrap();
    let flat = MediumResponse::flat(grid, 1.1).unwrap();
    let amplified: Vec<_> = source
        .iter()
        .map(|s| propagate_through_medium(s, &flat, Mode::Conjugate, 0.0, 5).unwrap())
        .collect();
    let est = estimate_covariance(&amplified, 0.0, &settings, &sn).unwrap();
    let expected = apply_phase_insensitive_gain(&epr_covariance(R_3DB).unwrap(), 1.1, Mode::Conjugate).unwrap();
    assert_within_sigma(&est, &expected, 3.0);
}

#[test]
fn inseparability_from_covariance_matches_band_powers() {
    let n = 1 << 16;
    let settings = SweepSettings {
        filter: None,
        ..SweepSettings::default()
    };
    let traces: Vec<_> = (0..5)
        .map(|i| shot_noise_reference(n, DT, 7, seed_tag(1 << 40 | i, 0, StreamRole::ShotNoise)).unwrap())
        .collect();
    let sn = ShotNoiseLevel::from_traces(&traces, settings.band, None).unwrap();
    let source = shots(R_3DB, n, 40, 7);
    let lags = LagGrid::new(0, 0, 1, DT).unwrap();
    let sweep = delay_sweep(&source, &lags, &settings, &sn).unwrap();
    let direct: Vec<f64> = source
        .iter()
        .map(|s| {
            sn.normalize(&joint_trace(s, JointQuadrature::XMinus).unwrap()).unwrap()
                + sn.normalize(&joint_trace(s, JointQuadrature::YPlus).unwrap()).unwrap()
        })
        .collect();
    let mean = direct.iter().sum::<f64>() / direct.len() as f64;
    let est = sweep.inseparability[0];
    assert!(
        (est.mean - mean).abs() <= 3.0 * est.sem,
        "{} vs {mean} (sem {})",
        est.mean,
        est.sem
    );
    assert!((est.mean - 1.0).abs() <= 3.0 * est.sem.hypot(est.mean * sn.relative_se()));
}

#[test]
fn uncorrelated_limit_far_from_zero_delay() {
    let n = 1 << 17;
    let settings = SweepSettings::default();
    let sn = shot_noise(n, &settings, 8);
    let source = shots(R_3DB, n, 60, 8);
    let lags = LagGrid::new(-50_000, 50_000, 50_000, DT).unwrap();
    let sweep = delay_sweep(&source, &lags, &settings, &sn).unwrap();
    for j in [0, 2] {
        let (mi, insep) = (sweep.mi_bits[j], sweep.inseparability[j]);
        assert!(mi.mean.abs() <= 3.0 * mi.sem.max(1e-3), "MI at ±20 µs: {mi:?}");
        // 2·cosh 2r with cosh 2r = 5/4
        let tol = 3.0 * insep.sem.hypot(2.5 * sn.relative_se());
        assert!((insep.mean - 2.5).abs() <= tol, "I at ±20 µs: {insep:?}");
    }
    let centre = sweep.inseparability[1];
    assert!(centre.mean < 1.1, "I at 0: {centre:?}");
}

#[test]
fn linear_phase_shift_is_recovered() {
    let n = 1 << 16;
    let settings = SweepSettings::default();
    let sn = shot_noise(n, &settings, 11);
    let source = shots(R_3DB, n, 12, 11);
    let lags = LagGrid::from_delays(-150e-9, 150e-9, DT, DT).unwrap();
    let reference = delay_sweep(&source, &lags, &settings, &sn).unwrap();
    let grid = FrequencyGrid::spanning(-10e6, 10e6, 10e3).unwrap();
    for tau in [-50e-9, -3.7e-9, 0.0, 1.3e-9, 22e-9, 50e-9] {
        let phase = grid.points().iter().map(|f| -2.0 * PI * f * tau).collect();
        let resp = MediumResponse::from_gain_and_phase(grid, &vec![1.0; grid.len], phase).unwrap();
        let moved: Vec<_> = source
            .iter()
            .map(|s| propagate_through_medium(s, &resp, Mode::Conjugate, 0.0, 11).unwrap())
            .collect();
        let test = delay_sweep(&moved, &lags, &settings, &sn).unwrap();
        let adv = peak_advance_from_sets(&reference.xcorr_peaks, &test.xcorr_peaks, true).unwrap();
        assert!(
            (adv.advance_s - tau).abs() <= DT,
            "τ {tau:e}: recovered {:e}",
            adv.advance_s
        );
        assert!(
            (adv.refined_advance_s - tau).abs() <= DT,
            "τ {tau:e}: refined {:e}",
            adv.refined_advance_s
        );
    }
}

#[test]
fn identical_sets_have_zero_advance() {
    let set = PeakSet {
        trials: vec![Some((1e-9, 1.1e-9)), Some((2e-9, 2.2e-9)), None, Some((0.0, 0.1e-9))],
    };
    let adv = peak_advance_from_sets(&set, &set, true).unwrap();
    assert_eq!((adv.advance_s, adv.sem_s), (0.0, 0.0));
    assert_eq!(adv.excluded_reference, 1);
    let adv = peak_advance_from_sets(&set, &set, false).unwrap();
    assert_eq!(adv.advance_s, 0.0);
    assert!(adv.sem_s > 0.0);
}

#[test]
fn edges_of_a_triangle() {
    let axis = TimeAxis {
        start_s: -10.0,
        step_s: 0.5,
        len: 41,
    };
    let values: Vec<f64> = (0..41).map(|i| (1.0 - (axis.time(i) / 6.0).abs()).max(0.0)).collect();
    let sems = vec![0.01; values.len()];
    let e = edge_timing(&values, &sems, &axis, EdgeLevel::default()).unwrap();
    assert!((e.leading.time_s + 3.0).abs() < 1e-12);
    assert!((e.trailing.time_s - 3.0).abs() < 1e-12);
    // σ / slope with slope 1/6
    assert!((e.leading.uncertainty_s - 0.06).abs() < 1e-12);
    assert!(edge_timing(&values, &sems, &axis, EdgeLevel::Absolute(2.0)).is_err());
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut cfg = RunConfig::with_label(RunLabel::Reference);
    cfg.acquisition.length = 1 << 15;
    cfg.acquisition.trials = 6;
    cfg.analysis.delays_ns.min_ns = -20.0;
    cfg.analysis.delays_ns.max_ns = 20.0;
    let conditions = [Condition::new(cfg).unwrap()];
    let one = run_simulated(&conditions, 1).unwrap();
    let many = run_simulated(&conditions, 3).unwrap();
    assert_eq!(one.conditions[0].result, many.conditions[0].result);
    assert_eq!(one.shots, many.shots);
}
