//! C ABI over the twinbeam core.
//!
//! Objects cross the boundary as opaque handles created by `tb_*_new`-style
//! constructors and released with the matching `tb_*_free`. Every fallible
//! function returns a [`TbStatus`]; on failure a message describing the error
//! is available from [`tb_last_error_message`] on the same thread until the
//! next failing call. Panics are caught and reported as `TB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use twinbeam::dispersion::{
    group_delay_in_band, kramers_kronig_phase, synth_gain_profile, transfer_at, FrequencyGrid, GainProfile,
    LorentzianLine, MediumResponse,
};
use twinbeam::gaussian::{
    apply_phase_insensitive_gain, entanglement_breaking_gain, epr_covariance, inseparability,
    inseparability_closed_form, mutual_information, Mode, TwoModeCovariance,
};
use twinbeam::io::trace::{read_trace, write_trace};
use twinbeam::sim::{Quadrature, QuadratureTrace, TraceMode};
use twinbeam::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unphysical = 3,
    OutOfGrid = 4,
    Io = 5,
    Format = 6,
    Panic = 7,
    Internal = 8,
}

pub const TB_MODE_PROBE: u32 = 0;
pub const TB_MODE_CONJUGATE: u32 = 1;
pub const TB_MODE_SHOT_NOISE: u32 = 2;
pub const TB_QUADRATURE_X: u32 = 0;
pub const TB_QUADRATURE_Y: u32 = 1;

/// Two-mode quadrature covariance matrix.
pub struct TbCovariance {
    inner: TwoModeCovariance,
}

/// Medium response (amplitude, KK phase, group delay) on a frequency grid.
pub struct TbMedium {
    inner: MediumResponse,
}

/// One sampled quadrature trace.
pub struct TbTrace {
    inner: QuadratureTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TbStatus {
    match err {
        Error::NotSymmetric(_) | Error::Unphysical(_) => TbStatus::Unphysical,
        Error::OutOfGrid(_) => TbStatus::OutOfGrid,
        Error::Io { .. } => TbStatus::Io,
        Error::Format { .. } | Error::Json(_) | Error::Config { .. } => TbStatus::Format,
        _ => TbStatus::InvalidArgument,
    }
}

struct Failure(TbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(TbStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(TbStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            TbStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn mode_arg(mode: u32) -> Result<Mode, Failure> {
    match mode {
        TB_MODE_PROBE => Ok(Mode::Probe),
        TB_MODE_CONJUGATE => Ok(Mode::Conjugate),
        other => Err(invalid(format!(
            "mode {other} is not TB_MODE_PROBE or TB_MODE_CONJUGATE"
        ))),
    }
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validated covariance from 16 row-major entries.
///
/// # Safety
/// `entries` must point to 16 readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_covariance_new(entries: *const f64, out: *mut *mut TbCovariance) -> TbStatus {
    guard(|| {
        let e = slice(entries, 16, "entries")?;
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row.copy_from_slice(&e[4 * i..4 * i + 4]);
        }
        let cov = TwoModeCovariance::new(m)?;
        write_out(out, "out", boxed(TbCovariance { inner: cov }))
    })
}

/// Two-mode squeezed vacuum with squeezing parameter `r`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_covariance_epr(r: f64, out: *mut *mut TbCovariance) -> TbStatus {
    guard(|| {
        let cov = epr_covariance(r)?;
        write_out(out, "out", boxed(TbCovariance { inner: cov }))
    })
}

/// New covariance after amplifying `mode` with phase-insensitive gain `gain`.
///
/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_covariance_apply_gain(
    cov: *const TbCovariance,
    gain: f64,
    mode: u32,
    out: *mut *mut TbCovariance,
) -> TbStatus {
    guard(|| {
        let cov = deref(cov, "cov")?;
        let amplified = apply_phase_insensitive_gain(&cov.inner, gain, mode_arg(mode)?)?;
        write_out(out, "out", boxed(TbCovariance { inner: amplified }))
    })
}

/// Copies the 16 row-major entries into `out`.
///
/// # Safety
/// `cov` must be a live handle; `out` must have room for 16 doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_covariance_entries(cov: *const TbCovariance, out: *mut f64) -> TbStatus {
    guard(|| {
        let cov = deref(cov, "cov")?;
        if out.is_null() {
            return Err(null("out"));
        }
        for (i, row) in cov.inner.entries().iter().enumerate() {
            ptr::copy_nonoverlapping(row.as_ptr(), out.add(4 * i), 4);
        }
        Ok(())
    })
}

/// # Safety
/// `cov` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_covariance_free(cov: *mut TbCovariance) {
    if !cov.is_null() {
        drop(Box::from_raw(cov));
    }
}

/// `Var(X_p - X_c) + Var(Y_p + Y_c)`; below 2 certifies entanglement.
///
/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_covariance_inseparability(cov: *const TbCovariance, out: *mut f64) -> TbStatus {
    guard(|| {
        let cov = deref(cov, "cov")?;
        write_out(out, "out", inseparability(&cov.inner))
    })
}

/// Quantum mutual information in bits.
///
/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_covariance_mutual_information(cov: *const TbCovariance, out: *mut f64) -> TbStatus {
    guard(|| {
        let cov = deref(cov, "cov")?;
        write_out(out, "out", mutual_information(&cov.inner)?)
    })
}

/// Both symplectic eigenvalues, ascending.
///
/// # Safety
/// `cov` must be a live handle; `out` must have room for 2 doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_covariance_symplectic_eigenvalues(cov: *const TbCovariance, out: *mut f64) -> TbStatus {
    guard(|| {
        let cov = deref(cov, "cov")?;
        let s = cov.inner.symplectic_eigenvalues();
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(s.min());
        out.add(1).write(s.max());
        Ok(())
    })
}

/// Closed-form inseparability of an EPR pair with one beam amplified by `gain`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_inseparability_closed_form(r: f64, gain: f64, out: *mut f64) -> TbStatus {
    guard(|| write_out(out, "out", inseparability_closed_form(r, gain)?))
}

/// Gain at which the closed-form inseparability reaches 2.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_entanglement_breaking_gain(r: f64, out: *mut f64) -> TbStatus {
    guard(|| write_out(out, "out", entanglement_breaking_gain(r)?))
}

/// Medium built from `n_lines` Lorentzian gain lines on the grid
/// `start_hz + i·step_hz`, `i < grid_len`, with KK-derived phase.
///
/// # Safety
/// `centers_hz`, `widths_hz` and `peaks` must each hold `n_lines` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_medium_from_lines(
    centers_hz: *const f64,
    widths_hz: *const f64,
    peaks: *const f64,
    n_lines: usize,
    start_hz: f64,
    step_hz: f64,
    grid_len: usize,
    out: *mut *mut TbMedium,
) -> TbStatus {
    guard(|| {
        let c = slice(centers_hz, n_lines, "centers_hz")?;
        let w = slice(widths_hz, n_lines, "widths_hz")?;
        let p = slice(peaks, n_lines, "peaks")?;
        let lines = (0..n_lines)
            .map(|i| LorentzianLine::new(c[i], w[i], p[i]))
            .collect::<twinbeam::Result<Vec<_>>>()?;
        let grid = FrequencyGrid::new(start_hz, step_hz, grid_len)?;
        let profile = synth_gain_profile(&lines, &grid)?;
        let response = kramers_kronig_phase(&profile)?;
        write_out(out, "out", boxed(TbMedium { inner: response }))
    })
}

/// Medium from a sampled power-gain profile on a uniform grid, with
/// KK-derived phase.
///
/// # Safety
/// `freq_hz` and `gain` must each hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_medium_from_gain(
    freq_hz: *const f64,
    gain: *const f64,
    len: usize,
    out: *mut *mut TbMedium,
) -> TbStatus {
    guard(|| {
        let f = slice(freq_hz, len, "freq_hz")?;
        let g = slice(gain, len, "gain")?;
        let profile = GainProfile::from_points(f, g.to_vec())?;
        let response = kramers_kronig_phase(&profile)?;
        write_out(out, "out", boxed(TbMedium { inner: response }))
    })
}

/// Gain-weighted mean group delay in seconds over `[lo_hz, hi_hz]`.
/// Negative values are advances.
///
/// # Safety
/// `medium` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_medium_group_delay_in_band(
    medium: *const TbMedium,
    lo_hz: f64,
    hi_hz: f64,
    out: *mut f64,
) -> TbStatus {
    guard(|| {
        let m = deref(medium, "medium")?;
        write_out(out, "out", group_delay_in_band(&m.inner, lo_hz, hi_hz)?)
    })
}

/// Interpolated amplitude, phase (rad) and noise coupling at `freq_hz`.
///
/// # Safety
/// `medium` must be a live handle; the three output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_medium_transfer_at(
    medium: *const TbMedium,
    freq_hz: f64,
    amplitude: *mut f64,
    phase: *mut f64,
    noise_coupling: *mut f64,
) -> TbStatus {
    guard(|| {
        let m = deref(medium, "medium")?;
        if amplitude.is_null() || phase.is_null() || noise_coupling.is_null() {
            return Err(null("amplitude/phase/noise_coupling"));
        }
        let t = transfer_at(&m.inner, freq_hz)?;
        amplitude.write(t.amplitude);
        phase.write(t.phase);
        noise_coupling.write(t.noise_coupling);
        Ok(())
    })
}

/// # Safety
/// `medium` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_medium_free(medium: *mut TbMedium) {
    if !medium.is_null() {
        drop(Box::from_raw(medium));
    }
}

/// Trace from `len` samples. `mode` is one of `TB_MODE_*`, `quadrature` one
/// of `TB_QUADRATURE_*`.
///
/// # Safety
/// `samples` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_trace_new(
    samples: *const f64,
    len: usize,
    sample_period_s: f64,
    mode: u32,
    quadrature: u32,
    seed_tag: u64,
    out: *mut *mut TbTrace,
) -> TbStatus {
    guard(|| {
        let s = slice(samples, len, "samples")?;
        if !(sample_period_s.is_finite() && sample_period_s > 0.0) {
            return Err(invalid(format!(
                "sample_period_s must be positive, got {sample_period_s}"
            )));
        }
        let mode = u8::try_from(mode)
            .ok()
            .and_then(TraceMode::from_code)
            .ok_or_else(|| invalid(format!("unknown mode {mode}")))?;
        let quadrature = u8::try_from(quadrature)
            .ok()
            .and_then(Quadrature::from_code)
            .ok_or_else(|| invalid(format!("unknown quadrature {quadrature}")))?;
        let trace = QuadratureTrace {
            samples: s.to_vec(),
            sample_period_s,
            mode,
            quadrature,
            seed_tag,
        };
        write_out(out, "out", boxed(TbTrace { inner: trace }))
    })
}

/// Reads a `.tbtr` trace file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_trace_read(path: *const c_char, out: *mut *mut TbTrace) -> TbStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let trace = read_trace(&path)?;
        write_out(out, "out", boxed(TbTrace { inner: trace }))
    })
}

/// Writes the trace atomically to `path`.
///
/// # Safety
/// `trace` must be a live handle; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tb_trace_write(trace: *const TbTrace, path: *const c_char) -> TbStatus {
    guard(|| {
        let trace = deref(trace, "trace")?;
        let path = path_arg(path, "path")?;
        write_trace(&path, &trace.inner)?;
        Ok(())
    })
}

/// Borrowed view of the samples. The pointer is valid until the handle is
/// freed.
///
/// # Safety
/// `trace` must be a live handle; `samples` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_trace_samples(
    trace: *const TbTrace,
    samples: *mut *const f64,
    len: *mut usize,
) -> TbStatus {
    guard(|| {
        let trace = deref(trace, "trace")?;
        write_out(samples, "samples", trace.inner.samples.as_ptr())?;
        write_out(len, "len", trace.inner.samples.len())
    })
}

/// Sample period, mode code and quadrature code of the trace.
///
/// # Safety
/// `trace` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_trace_info(
    trace: *const TbTrace,
    sample_period_s: *mut f64,
    mode: *mut u32,
    quadrature: *mut u32,
) -> TbStatus {
    guard(|| {
        let t = &deref(trace, "trace")?.inner;
        write_out(sample_period_s, "sample_period_s", t.sample_period_s)?;
        write_out(mode, "mode", u32::from(t.mode.code()))?;
        write_out(quadrature, "quadrature", u32::from(t.quadrature.code()))
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_trace_free(trace: *mut TbTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
