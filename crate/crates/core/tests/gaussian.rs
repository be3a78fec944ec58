mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use twinbeam::gaussian::*;

use common::fock::FockState;
use common::R_3DB;

fn amplified(r: f64, gain: f64, mode: Mode) -> TwoModeCovariance {
    apply_phase_insensitive_gain(&epr_covariance(r).unwrap(), gain, mode).unwrap()
}

/// Local symplectic on both modes: rotation, single-mode squeezer, rotation.
fn local_symplectic(angles: [f64; 4], squeeze: [f64; 2]) -> [[f64; 4]; 4] {
    let rot = |t: f64| [[t.cos(), -t.sin()], [t.sin(), t.cos()]];
    let mul = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        m
    };
    let mut s = [[0.0; 4]; 4];
    for k in 0..2 {
        let sq = [[squeeze[k].exp(), 0.0], [0.0, (-squeeze[k]).exp()]];
        let b = mul(mul(rot(angles[2 * k]), sq), rot(angles[2 * k + 1]));
        for i in 0..2 {
            for j in 0..2 {
                s[2 * k + i][2 * k + j] = b[i][j];
            }
        }
    }
    s
}

fn conjugate(s: &[[f64; 4]; 4], cov: &TwoModeCovariance) -> TwoModeCovariance {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4)
                .flat_map(|k| (0..4).map(move |l| (k, l)))
                .map(|(k, l)| s[i][k] * cov.get(k, l) * s[j][l])
                .sum();
        }
    }
    TwoModeCovariance::symmetrized(out)
}

#[test]
fn matrix_pipeline_matches_closed_form_on_grid() {
    let mut worst = 0.0_f64;
    for i in 0..=40 {
        let r = 0.05 * i as f64;
        for j in 0..=60 {
            let g = 1.0 + 0.05 * j as f64;
            for mode in [Mode::Probe, Mode::Conjugate] {
                let m = inseparability(&amplified(r, g, mode));
                worst = worst.max((m - inseparability_closed_form(r, g).unwrap()).abs());
            }
        }
    }
    assert!(worst <= 1e-9, "max deviation {worst:e}");
}

#[test]
fn three_db_reference_points() {
    assert_abs_diff_eq!(inseparability(&epr_covariance(R_3DB).unwrap()), 1.0, epsilon = 1e-12);
    let i = inseparability(&amplified(R_3DB, 1.1, Mode::Conjugate));
    assert_abs_diff_eq!(i, 2.725 - 1.5 * 1.1_f64.sqrt(), epsilon = 1e-9);
    assert!((i - 1.15178).abs() < 1e-5);
}

#[test]
fn fast_preset_covariance_entries() {
    let c = amplified(R_3DB, 1.1, Mode::Conjugate);
    assert_abs_diff_eq!(c.get(0, 0), 1.25, epsilon = 1e-12);
    assert_abs_diff_eq!(c.get(2, 2), 1.475, epsilon = 1e-12);
    assert_abs_diff_eq!(c.get(0, 2), 0.75 * 1.1_f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(c.get(1, 3), -0.75 * 1.1_f64.sqrt(), epsilon = 1e-12);
}

#[test]
fn pure_epr_mutual_information() {
    // 2·g(cosh 2r); for the −3 dB source cosh 2r = 5/4
    let mi = mutual_information(&epr_covariance(R_3DB).unwrap()).unwrap();
    let expected = 2.0 * (1.125 * 1.125_f64.log2() - 0.125 * 0.125_f64.log2());
    assert_abs_diff_eq!(mi, expected, epsilon = 1e-12);
    assert_abs_diff_eq!(mi, 1.13233, epsilon = 1e-5);
}

#[test]
fn breaking_gain_bisection_agrees_with_scan() {
    for r in [0.1, 0.2, R_3DB, 0.5, 0.8] {
        let g_star = entanglement_breaking_gain(r).unwrap();
        let step = 1e-5;
        let mut g = 1.0;
        while inseparability_closed_form(r, g).unwrap() < 2.0 {
            g += step;
        }
        assert!((g - g_star).abs() <= step, "r {r}: bisection {g_star} scan {g}");
    }
    let g = entanglement_breaking_gain(R_3DB).unwrap();
    assert!((g - 1.6286).abs() <= 1e-3, "{g}");
    // 2.25 G − 1.5 √G − 1.75 = 0
    let root = (1.5 + (2.25_f64 + 4.0 * 2.25 * 1.75).sqrt()) / 4.5;
    assert_abs_diff_eq!(g, root * root, epsilon = 1e-9);
}

#[test]
fn fock_oracle_mutual_information() {
    let mut worst = 0.0_f64;
    for r in [0.05, 0.1, 0.2, 0.3] {
        for g in [1.0, 1.05, 1.1, 1.2, 1.5, 2.0] {
            let fock = FockState::amplified_epr(r, g, 20, 400);
            assert!(
                fock.leaked() < 1e-12,
                "truncation leak {} at r {r} G {g}",
                fock.leaked()
            );
            let oracle = fock.mutual_information_bits();
            let ours = mutual_information(&amplified(r, g, Mode::Conjugate)).unwrap();
            worst = worst.max((oracle - ours).abs());
            let n = fock.amplified_mean_photons();
            let var = amplified(r, g, Mode::Conjugate).get(2, 2);
            assert_abs_diff_eq!(2.0 * n + 1.0, var, epsilon = 1e-9);
        }
    }
    assert!(worst <= 1e-3, "max |ΔMI| = {worst:e} bits");
}

#[test]
fn symplectic_spectrum_of_pure_state_is_exact() {
    for r in [0.1, 0.5, 1.0, 2.0] {
        let s = epr_covariance(r).unwrap().symplectic_eigenvalues();
        assert_abs_diff_eq!(s.min(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.max(), 1.0, epsilon = 1e-10);
    }
}

#[test]
fn partial_transpose_certifies_entanglement() {
    let c = epr_covariance(R_3DB).unwrap();
    let pt = partial_transpose(&c).symplectic_eigenvalues().min();
    assert_abs_diff_eq!(pt, (-2.0 * R_3DB).exp(), epsilon = 1e-12);
    // past G* the sum criterion no longer certifies, but a quantum-limited
    // amplifier never makes the pair PPT
    let past = amplified(R_3DB, 2.0, Mode::Conjugate);
    assert!(inseparability(&past) > 2.0);
    assert!(partial_transpose(&past).symplectic_eigenvalues().min() < 1.0);
    let vac = apply_phase_insensitive_gain(&TwoModeCovariance::vacuum(), 2.0, Mode::Conjugate).unwrap();
    assert!(partial_transpose(&vac).symplectic_eigenvalues().min() >= 1.0 - 1e-12);
}

#[test]
fn unphysical_inputs_are_errors() {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 0.5;
    }
    assert!(matches!(TwoModeCovariance::new(m), Err(twinbeam::Error::Unphysical(_))));
    m[0][1] = 0.1;
    assert!(matches!(
        TwoModeCovariance::new(m),
        Err(twinbeam::Error::NotSymmetric(_))
    ));
    assert!(apply_phase_insensitive_gain(&TwoModeCovariance::vacuum(), 0.9, Mode::Probe).is_err());
    assert!(epr_covariance(-0.1).is_err());
    assert!(inseparability_closed_form(0.3, f64::NAN).is_err());
}

proptest! {
    #[test]
    fn gain_preserves_physicality(r in 0.0..2.0f64, g1 in 1.0..5.0f64, g2 in 1.0..5.0f64) {
        let once = amplified(r, g1, Mode::Conjugate);
        let twice = apply_phase_insensitive_gain(&once, g2, Mode::Probe).unwrap();
        prop_assert!(twice.is_physical(PHYSICAL_TOLERANCE));
        prop_assert!(twice.symplectic_eigenvalues().min() >= 1.0 - 1e-9);
    }

    #[test]
    fn gains_on_one_mode_compose(r in 0.0..1.5f64, g1 in 1.0..3.0f64, g2 in 1.0..3.0f64) {
        let a = apply_phase_insensitive_gain(&amplified(r, g1, Mode::Probe), g2, Mode::Probe).unwrap();
        let b = amplified(r, g1 * g2, Mode::Probe);
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((a.get(i, j) - b.get(i, j)).abs() <= 1e-9 * (1.0 + b.get(i, j).abs()));
            }
        }
    }

    #[test]
    fn mutual_information_decays_with_gain(r in 0.01..1.5f64, g in 1.0..4.0f64, dg in 0.001..1.0f64) {
        let lo = mutual_information(&amplified(r, g, Mode::Conjugate)).unwrap();
        let hi = mutual_information(&amplified(r, g + dg, Mode::Conjugate)).unwrap();
        prop_assert!(hi < lo, "MI({}) = {hi} >= MI({g}) = {lo}", g + dg);
        prop_assert!(hi >= 0.0);
    }

    #[test]
    fn inseparability_increases_with_gain(r in 0.01..1.5f64, g in 1.0..4.0f64, dg in 0.001..1.0f64) {
        let a = inseparability_closed_form(r, g).unwrap();
        let b = inseparability_closed_form(r, g + dg).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn mode_labels_are_symmetric(r in 0.0..1.5f64, g in 1.0..4.0f64) {
        let p = amplified(r, g, Mode::Probe);
        let c = amplified(r, g, Mode::Conjugate);
        prop_assert!((inseparability(&p) - inseparability(&c)).abs() < 1e-9);
        prop_assert!((mutual_information(&p).unwrap() - mutual_information(&c).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn spectrum_survives_local_symplectics(
        r in 0.0..1.5f64,
        g in 1.0..3.0f64,
        angles in prop::array::uniform4(-3.2..3.2f64),
        squeeze in prop::array::uniform2(-1.0..1.0f64),
    ) {
        let cov = amplified(r, g, Mode::Conjugate);
        let moved = conjugate(&local_symplectic(angles, squeeze), &cov);
        let (a, b) = (cov.symplectic_eigenvalues(), moved.symplectic_eigenvalues());
        prop_assert!((a.min() - b.min()).abs() <= 1e-8 && (a.max() - b.max()).abs() <= 1e-8 * a.max());
        let (ma, mb) = (mutual_information(&cov).unwrap(), mutual_information(&moved).unwrap());
        prop_assert!((ma - mb).abs() <= 1e-8, "MI {ma} vs {mb}");
    }

    #[test]
    fn db_conversion_round_trips(db in -20.0..0.0f64) {
        prop_assert!((db_from_r(r_from_db(db).unwrap()) - db).abs() < 1e-9);
    }
}
