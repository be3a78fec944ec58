use std::ffi::{CStr, CString};
use std::ptr;

use twinbeam_ffi::*;

fn last_error() -> String {
    let p = tb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn epr_then_gain_matches_closed_form() {
    let r = 0.5_f64;
    let g = 1.3;
    unsafe {
        let mut epr = ptr::null_mut();
        assert_eq!(tb_covariance_epr(r, &mut epr), TbStatus::Ok);
        let mut amp = ptr::null_mut();
        let st = tb_covariance_apply_gain(epr, g, TB_MODE_CONJUGATE, &mut amp);
        assert_eq!(st, TbStatus::Ok, "{}", last_error());

        let mut insep = 0.0;
        assert_eq!(tb_covariance_inseparability(amp, &mut insep), TbStatus::Ok);
        let mut expected = 0.0;
        assert_eq!(tb_inseparability_closed_form(r, g, &mut expected), TbStatus::Ok);
        assert!((insep - expected).abs() < 1e-12, "{insep} vs {expected}");

        let mut e = [0.0; 16];
        assert_eq!(tb_covariance_entries(epr, e.as_mut_ptr()), TbStatus::Ok);
        assert!((e[0] - (2.0 * r).cosh()).abs() < 1e-12);
        assert!((e[2] - (2.0 * r).sinh()).abs() < 1e-12);

        let mut nu = [0.0; 2];
        assert_eq!(tb_covariance_symplectic_eigenvalues(epr, nu.as_mut_ptr()), TbStatus::Ok);
        assert!((nu[0] - 1.0).abs() < 1e-9 && (nu[1] - 1.0).abs() < 1e-9);

        // pure state: I = 2·S(cosh 2r)
        let mut mi = 0.0;
        assert_eq!(tb_covariance_mutual_information(epr, &mut mi), TbStatus::Ok);
        let n = r.sinh().powi(2);
        let s = (n + 1.0) * (n + 1.0).log2() - n * n.log2();
        assert!((mi - 2.0 * s).abs() < 1e-9, "{mi}");

        tb_covariance_free(amp);
        tb_covariance_free(epr);
    }
}

#[test]
fn unphysical_matrix_is_rejected_with_message() {
    let mut m = [0.0; 16];
    for i in 0..4 {
        m[5 * i] = 0.5;
    }
    let mut out = ptr::null_mut();
    let status = unsafe { tb_covariance_new(m.as_ptr(), &mut out) };
    assert_eq!(status, TbStatus::Unphysical);
    assert!(out.is_null());
    assert!(last_error().contains("unphysical"));
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(tb_covariance_epr(0.3, ptr::null_mut()), TbStatus::NullPointer);
        let mut x = 0.0;
        assert_eq!(tb_covariance_inseparability(ptr::null(), &mut x), TbStatus::NullPointer);
        assert_eq!(tb_trace_read(ptr::null(), &mut ptr::null_mut()), TbStatus::NullPointer);
        tb_covariance_free(ptr::null_mut());
        tb_medium_free(ptr::null_mut());
        tb_trace_free(ptr::null_mut());
    }
}

#[test]
fn bad_mode_and_gain_are_invalid_arguments() {
    unsafe {
        let mut epr = ptr::null_mut();
        assert_eq!(tb_covariance_epr(0.3, &mut epr), TbStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(
            tb_covariance_apply_gain(epr, 1.2, 7, &mut out),
            TbStatus::InvalidArgument
        );
        assert_eq!(
            tb_covariance_apply_gain(epr, 0.5, TB_MODE_PROBE, &mut out),
            TbStatus::InvalidArgument
        );
        assert!(out.is_null());
        tb_covariance_free(epr);
    }
}

#[test]
fn breaking_gain_reaches_two() {
    let r = 0.4;
    unsafe {
        let mut g = 0.0;
        assert_eq!(tb_entanglement_breaking_gain(r, &mut g), TbStatus::Ok);
        let mut i = 0.0;
        assert_eq!(tb_inseparability_closed_form(r, g, &mut i), TbStatus::Ok);
        assert!((i - 2.0).abs() < 1e-6, "{i}");
    }
}

#[test]
fn single_line_medium_delays_and_grid_is_enforced() {
    let (c, w, p) = ([0.0], [1e6], [0.2]);
    unsafe {
        let mut m = ptr::null_mut();
        let st = tb_medium_from_lines(c.as_ptr(), w.as_ptr(), p.as_ptr(), 1, -100e6, 10e3, 20_001, &mut m);
        assert_eq!(st, TbStatus::Ok, "{}", last_error());

        let mut tau = 0.0;
        assert_eq!(tb_medium_group_delay_in_band(m, -0.1e6, 0.1e6, &mut tau), TbStatus::Ok);
        assert!(tau > 0.0, "gain line centre must delay, got {tau}");

        let (mut a, mut ph, mut nc) = (0.0, 0.0, 0.0);
        assert_eq!(tb_medium_transfer_at(m, 0.0, &mut a, &mut ph, &mut nc), TbStatus::Ok);
        assert!((a * a - 1.2).abs() < 1e-9);
        assert!((nc - 0.2).abs() < 1e-9);
        assert_eq!(
            tb_medium_transfer_at(m, 500e6, &mut a, &mut ph, &mut nc),
            TbStatus::OutOfGrid
        );
        tb_medium_free(m);
    }
}

#[test]
fn medium_from_gain_rejects_non_uniform_grid() {
    let f = [0.0, 1.0, 3.0, 4.0];
    let g = [1.0; 4];
    let mut m = ptr::null_mut();
    let st = unsafe { tb_medium_from_gain(f.as_ptr(), g.as_ptr(), 4, &mut m) };
    assert_eq!(st, TbStatus::InvalidArgument);
    assert!(last_error().contains("non-uniform"));
}

#[test]
fn trace_round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.tbtr").to_str().unwrap()).unwrap();
    let samples: Vec<f64> = (0..257).map(|i| (i as f64 * 0.37).sin()).collect();
    unsafe {
        let mut t = ptr::null_mut();
        let st = tb_trace_new(
            samples.as_ptr(),
            samples.len(),
            0.4e-9,
            TB_MODE_CONJUGATE,
            TB_QUADRATURE_Y,
            42,
            &mut t,
        );
        assert_eq!(st, TbStatus::Ok);
        assert_eq!(tb_trace_write(t, path.as_ptr()), TbStatus::Ok);
        tb_trace_free(t);

        let mut back = ptr::null_mut();
        assert_eq!(tb_trace_read(path.as_ptr(), &mut back), TbStatus::Ok);
        let (mut p, mut n) = (ptr::null(), 0usize);
        assert_eq!(tb_trace_samples(back, &mut p, &mut n), TbStatus::Ok);
        assert_eq!(std::slice::from_raw_parts(p, n), samples.as_slice());
        let (mut dt, mut mode, mut quad) = (0.0, 9, 9);
        assert_eq!(tb_trace_info(back, &mut dt, &mut mode, &mut quad), TbStatus::Ok);
        assert_eq!((mode, quad), (TB_MODE_CONJUGATE, TB_QUADRATURE_Y));
        assert!((dt - 0.4e-9).abs() < 1e-24);
        tb_trace_free(back);
    }
}

#[test]
fn missing_and_corrupt_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let missing = CString::new(dir.path().join("nope.tbtr").to_str().unwrap()).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { tb_trace_read(missing.as_ptr(), &mut t) }, TbStatus::Io);

    let junk = dir.path().join("junk.tbtr");
    std::fs::write(&junk, b"not a trace at all, definitely not").unwrap();
    let junk = CString::new(junk.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { tb_trace_read(junk.as_ptr(), &mut t) }, TbStatus::Format);
    assert!(t.is_null());
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(tb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/twinbeam.h")).unwrap();
    for sym in [
        "tb_covariance_epr",
        "tb_medium_from_lines",
        "tb_trace_read",
        "TB_STATUS_UNPHYSICAL",
        "typedef struct TbTrace TbTrace",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}
