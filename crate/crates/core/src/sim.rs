//! Homodyne trace synthesis for a two-mode squeezed vacuum, propagation of
//! one mode through a [`MediumResponse`], and shot-noise reference traces.
//!
//! Synthesis and propagation happen bin by bin in the frequency domain.
//! Randomness comes from ChaCha20 streams keyed by `(seed, seed_tag)`, so any
//! shot can be regenerated in isolation and in any order.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dispersion::{transfer_at, MediumResponse};
use crate::error::{Error, Result};
use crate::fft;
use crate::gaussian::Mode;

/// 2.5 GS/s.
pub const DEFAULT_SAMPLE_PERIOD_S: f64 = 0.4e-9;
pub const DEFAULT_TRACE_LENGTH: usize = 1_000_000;

/// Which physical beam a trace records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    Probe,
    Conjugate,
    ShotNoise,
}

impl TraceMode {
    pub fn code(self) -> u8 {
        match self {
            TraceMode::Probe => 0,
            TraceMode::Conjugate => 1,
            TraceMode::ShotNoise => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TraceMode::Probe),
            1 => Some(TraceMode::Conjugate),
            2 => Some(TraceMode::ShotNoise),
            _ => None,
        }
    }
}

impl From<Mode> for TraceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Probe => TraceMode::Probe,
            Mode::Conjugate => TraceMode::Conjugate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    Y,
}

impl Quadrature {
    pub fn code(self) -> u8 {
        match self {
            Quadrature::X => 0,
            Quadrature::Y => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Quadrature::X),
            1 => Some(Quadrature::Y),
            _ => None,
        }
    }
}

/// The joint quadrature a shot is labelled by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointQuadrature {
    /// `(X_p - X_c)/√2`
    XMinus,
    /// `(Y_p + Y_c)/√2`
    YPlus,
}

impl fmt::Display for JointQuadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JointQuadrature::XMinus => "XMinus",
            JointQuadrature::YPlus => "YPlus",
        })
    }
}

impl FromStr for JointQuadrature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "XMinus" => Ok(JointQuadrature::XMinus),
            "YPlus" => Ok(JointQuadrature::YPlus),
            other => Err(Error::invalid("squeezed_joint", format!("unknown label `{other}`"))),
        }
    }
}

/// RNG stream roles within a shot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamRole {
    Source = 0,
    Medium = 1,
    ShotNoise = 2,
}

/// Packs shot index, trigger attempt and role into a ChaCha stream id.
pub fn seed_tag(shot: u64, attempt: u64, role: StreamRole) -> u64 {
    (shot << 8) | ((attempt & 0xF) << 4) | role as u64
}

/// Same shot and attempt, different role.
pub fn with_role(tag: u64, role: StreamRole) -> u64 {
    (tag & !0xF) | role as u64
}

fn rng_for(seed: u64, tag: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// A sampled homodyne photocurrent in shot-noise units.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureTrace {
    pub samples: Vec<f64>,
    pub sample_period_s: f64,
    pub mode: TraceMode,
    pub quadrature: Quadrature,
    pub seed_tag: u64,
}

impl QuadratureTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period_s
    }

    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.sample_period_s
    }

    /// Errors unless both traces have the same length and sample period.
    pub fn check_compatible(&self, other: &QuadratureTrace) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::TraceMismatch(format!(
                "lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        if self.sample_period_s != other.sample_period_s {
            return Err(Error::TraceMismatch(format!(
                "sample periods {} s and {} s",
                self.sample_period_s, other.sample_period_s
            )));
        }
        Ok(())
    }
}

/// Probe and conjugate quadrature traces from one acquisition.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentShot {
    pub probe_x: QuadratureTrace,
    pub probe_y: QuadratureTrace,
    pub conj_x: QuadratureTrace,
    pub conj_y: QuadratureTrace,
    pub squeezed_joint: JointQuadrature,
    pub config_digest: String,
    /// Band where the source carries correlations; the medium grid must
    /// cover it.
    pub source_band_hz: (f64, f64),
    /// Squeezing of `(X_-, Y_+)` in dB, read in the trigger window.
    pub trigger_db: [f64; 2],
}

impl ExperimentShot {
    pub fn len(&self) -> usize {
        self.probe_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probe_x.is_empty()
    }

    pub fn sample_period_s(&self) -> f64 {
        self.probe_x.sample_period_s
    }

    pub fn seed_tag(&self) -> u64 {
        self.probe_x.seed_tag
    }

    pub fn traces(&self) -> [&QuadratureTrace; 4] {
        [&self.probe_x, &self.probe_y, &self.conj_x, &self.conj_y]
    }

    /// `(x, y)` traces of one mode.
    pub fn mode_traces(&self, mode: Mode) -> (&QuadratureTrace, &QuadratureTrace) {
        match mode {
            Mode::Probe => (&self.probe_x, &self.probe_y),
            Mode::Conjugate => (&self.conj_x, &self.conj_y),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.traces()[1..] {
            self.probe_x.check_compatible(t)?;
        }
        let expected = [
            (TraceMode::Probe, Quadrature::X),
            (TraceMode::Probe, Quadrature::Y),
            (TraceMode::Conjugate, Quadrature::X),
            (TraceMode::Conjugate, Quadrature::Y),
        ];
        for (t, (m, q)) in self.traces().iter().zip(expected) {
            if t.mode != m || t.quadrature != q {
                return Err(Error::TraceMismatch(format!(
                    "expected {m:?}/{q:?} trace, found {:?}/{:?}",
                    t.mode, t.quadrature
                )));
            }
        }
        Ok(())
    }
}

/// Two-mode squeezing parameter as a function of detection frequency: flat
/// `r` inside `[lo, hi]` with raised-cosine ramps over the inner 10% of each
/// edge frequency, zero outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezingSpectrum {
    pub r: f64,
    pub band_hz: (f64, f64),
    #[serde(default = "default_rolloff")]
    pub rolloff_fraction: f64,
}

fn default_rolloff() -> f64 {
    0.1
}

impl Default for SqueezingSpectrum {
    fn default() -> Self {
        Self {
            r: 0.5 * std::f64::consts::LN_2,
            band_hz: (20e3, 3e6),
            rolloff_fraction: default_rolloff(),
        }
    }
}

impl SqueezingSpectrum {
    pub fn flat(r: f64, band_hz: (f64, f64)) -> Result<Self> {
        let s = Self {
            r,
            band_hz,
            rolloff_fraction: default_rolloff(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::invalid("r", format!("must be >= 0, got {}", self.r)));
        }
        let (lo, hi) = self.band_hz;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Band {
                lo,
                hi,
                reason: "need 0 <= lo < hi".into(),
            });
        }
        if !(0.0..0.5).contains(&self.rolloff_fraction) {
            return Err(Error::invalid("rolloff_fraction", "must lie in [0, 0.5)"));
        }
        Ok(())
    }

    pub fn r_at(&self, f: f64) -> f64 {
        let (lo, hi) = self.band_hz;
        let f = f.abs();
        if f < lo || f > hi {
            return 0.0;
        }
        let ramp_lo = self.rolloff_fraction * lo;
        let ramp_hi = self.rolloff_fraction * hi;
        if ramp_lo > 0.0 && f < lo + ramp_lo {
            self.r * 0.5 * (1.0 - (PI * (f - lo) / ramp_lo).cos())
        } else if ramp_hi > 0.0 && f > hi - ramp_hi {
            self.r * 0.5 * (1.0 + (PI * (f - (hi - ramp_hi)) / ramp_hi).cos())
        } else {
            self.r
        }
    }
}

/// Software stand-in for the spectrum-analyzer trigger: the joint
/// quadrature noise averaged over `center ± rbw/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerSpec {
    pub enabled: bool,
    pub center_hz: f64,
    pub rbw_hz: f64,
    /// Required squeezing in dB below shot noise.
    pub threshold_db: f64,
    pub max_attempts: u32,
}

impl Default for TriggerSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            center_hz: 750e3,
            rbw_hz: 30e3,
            threshold_db: 2.0,
            max_attempts: 16,
        }
    }
}

impl TriggerSpec {
    pub fn accepts(&self, shot: &ExperimentShot) -> bool {
        !self.enabled || shot.trigger_db[0].min(shot.trigger_db[1]) <= -self.threshold_db
    }
}

fn complex_normal(rng: &mut ChaCha20Rng, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

fn real_normal(rng: &mut ChaCha20Rng, variance: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    Complex64::new(variance.sqrt() * re, 0.0)
}

fn check_length(length: usize, sample_period_s: f64) -> Result<()> {
    if length < 8 || !length.is_multiple_of(2) {
        return Err(Error::invalid("length", format!("must be even and >= 8, got {length}")));
    }
    if !(sample_period_s.is_finite() && sample_period_s > 0.0) {
        return Err(Error::invalid(
            "sample_period",
            format!("must be > 0, got {sample_period_s}"),
        ));
    }
    Ok(())
}

/// One shot of the two-mode squeezed vacuum. `trigger` only sets the window
/// where `trigger_db` is read; acceptance is up to the caller.
pub fn synthesize_shot(
    spec: &SqueezingSpectrum,
    length: usize,
    sample_period_s: f64,
    seed: u64,
    tag: u64,
    trigger: &TriggerSpec,
) -> Result<ExperimentShot> {
    spec.validate()?;
    check_length(length, sample_period_s)?;
    let nyquist = 0.5 / sample_period_s;
    if spec.band_hz.1 >= nyquist {
        return Err(Error::Band {
            lo: spec.band_hz.0,
            hi: spec.band_hz.1,
            reason: format!("upper edge must stay below Nyquist ({nyquist} Hz)"),
        });
    }
    let n = length;
    let nf = n as f64;
    let df = 1.0 / (nf * sample_period_s);
    let mut rng = rng_for(seed, with_role(tag, StreamRole::Source));
    let zero = Complex64::new(0.0, 0.0);
    let (mut px, mut py, mut cx, mut cy) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let (trig_lo, trig_hi) = (
        trigger.center_hz - 0.5 * trigger.rbw_hz,
        trigger.center_hz + 0.5 * trigger.rbw_hz,
    );
    let (mut trig_xm, mut trig_yp, mut trig_bins) = (0.0, 0.0, 0usize);
    for k in 0..=n / 2 {
        if k == 0 || k == n / 2 {
            for spec_k in [&mut px, &mut py, &mut cx, &mut cy] {
                spec_k[k] = real_normal(&mut rng, nf);
            }
            continue;
        }
        let r = spec.r_at(k as f64 * df);
        let (sq, anti) = ((-2.0 * r).exp() * nf, (2.0 * r).exp() * nf);
        let x_minus = complex_normal(&mut rng, sq);
        let x_plus = complex_normal(&mut rng, anti);
        let y_plus = complex_normal(&mut rng, sq);
        let y_minus = complex_normal(&mut rng, anti);
        px[k] = FRAC_1_SQRT_2 * (x_plus + x_minus);
        cx[k] = FRAC_1_SQRT_2 * (x_plus - x_minus);
        py[k] = FRAC_1_SQRT_2 * (y_plus + y_minus);
        cy[k] = FRAC_1_SQRT_2 * (y_plus - y_minus);
        let f = k as f64 * df;
        if f >= trig_lo && f <= trig_hi {
            trig_xm += x_minus.norm_sqr() / nf;
            trig_yp += y_plus.norm_sqr() / nf;
            trig_bins += 1;
        }
    }
    let to_db = |p: f64| {
        if trig_bins == 0 {
            0.0
        } else {
            10.0 * (p / trig_bins as f64).log10()
        }
    };
    let trigger_db = [to_db(trig_xm), to_db(trig_yp)];
    let squeezed_joint = if trigger_db[1] < trigger_db[0] {
        JointQuadrature::YPlus
    } else {
        JointQuadrature::XMinus
    };
    for s in [&mut px, &mut py, &mut cx, &mut cy] {
        fft::enforce_hermitian(s);
    }
    let (probe_x, conj_x) = fft::real_pair_from_spectra(&px, &cx);
    let (probe_y, conj_y) = fft::real_pair_from_spectra(&py, &cy);
    let source_tag = with_role(tag, StreamRole::Source);
    let trace = |samples, mode, quadrature| QuadratureTrace {
        samples,
        sample_period_s,
        mode,
        quadrature,
        seed_tag: source_tag,
    };
    Ok(ExperimentShot {
        probe_x: trace(probe_x, TraceMode::Probe, Quadrature::X),
        probe_y: trace(probe_y, TraceMode::Probe, Quadrature::Y),
        conj_x: trace(conj_x, TraceMode::Conjugate, Quadrature::X),
        conj_y: trace(conj_y, TraceMode::Conjugate, Quadrature::Y),
        squeezed_joint,
        config_digest: String::new(),
        source_band_hz: spec.band_hz,
        trigger_db,
    })
}

/// Sends one mode through the medium. Detection frequency `f` maps to
/// detuning `offset_hz + f`; the phase is referenced to the carrier at
/// `offset_hz`, as a local oscillator that follows the carrier would see it.
/// Each bin gets the amplifier channel
/// `X' = t·X + √(G-1)·e^{iφ}·B_x`, `Y' = t·Y - √(G-1)·e^{iφ}·B_y`
/// with fresh vacuum `B`. An identity medium returns the shot unchanged.
pub fn propagate_through_medium(
    shot: &ExperimentShot,
    resp: &MediumResponse,
    mode: Mode,
    offset_hz: f64,
    seed: u64,
) -> Result<ExperimentShot> {
    shot.validate()?;
    if resp.is_identity() {
        return Ok(shot.clone());
    }
    let grid = resp.grid();
    for edge in [shot.source_band_hz.0, shot.source_band_hz.1] {
        if !grid.contains(offset_hz + edge) {
            return Err(Error::Grid(format!(
                "medium grid ({} .. {} Hz) does not cover source band edge {} Hz at offset {} Hz",
                grid.start_hz,
                grid.end_hz(),
                edge,
                offset_hz
            )));
        }
    }
    let carrier_phase = transfer_at(resp, offset_hz)?.phase;
    let (xt, yt) = shot.mode_traces(mode);
    let (mut xs, mut ys) = fft::real_pair_spectra(&xt.samples, &yt.samples);
    let n = xt.len();
    let nf = n as f64;
    let df = 1.0 / (nf * xt.sample_period_s);
    let medium_tag = with_role(shot.seed_tag(), StreamRole::Medium);
    let mut rng = rng_for(seed, medium_tag);
    for k in 0..=n / 2 {
        let real_bin = k == 0 || k == n / 2;
        let (bx, by) = if real_bin {
            (real_normal(&mut rng, nf), real_normal(&mut rng, nf))
        } else {
            (complex_normal(&mut rng, nf), complex_normal(&mut rng, nf))
        };
        let Ok(t) = transfer_at(resp, offset_hz + k as f64 * df) else {
            continue;
        };
        let rot = if real_bin {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, t.phase - carrier_phase)
        };
        let noise = t.noise_coupling.sqrt();
        xs[k] = rot * (t.amplitude * xs[k] + noise * bx);
        ys[k] = rot * (t.amplitude * ys[k] - noise * by);
    }
    fft::enforce_hermitian(&mut xs);
    fft::enforce_hermitian(&mut ys);
    let (x_new, y_new) = fft::real_pair_from_spectra(&xs, &ys);
    let mut out = shot.clone();
    let (x_slot, y_slot) = match mode {
        Mode::Probe => (&mut out.probe_x, &mut out.probe_y),
        Mode::Conjugate => (&mut out.conj_x, &mut out.conj_y),
    };
    x_slot.samples = x_new;
    y_slot.samples = y_new;
    Ok(out)
}

/// Unit-variance white Gaussian trace (blocked-beam vacuum).
pub fn shot_noise_reference(length: usize, sample_period_s: f64, seed: u64, tag: u64) -> Result<QuadratureTrace> {
    if !(sample_period_s.is_finite() && sample_period_s > 0.0) {
        return Err(Error::invalid(
            "sample_period",
            format!("must be > 0, got {sample_period_s}"),
        ));
    }
    let tag = with_role(tag, StreamRole::ShotNoise);
    let mut rng = rng_for(seed, tag);
    let samples = (0..length).map(|_| rng.sample(StandardNormal)).collect();
    Ok(QuadratureTrace {
        samples,
        sample_period_s,
        mode: TraceMode::ShotNoise,
        quadrature: Quadrature::X,
        seed_tag: tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_pack_and_swap_role() {
        let t = seed_tag(7, 2, StreamRole::Source);
        assert_eq!(t, (7 << 8) | (2 << 4));
        assert_eq!(with_role(t, StreamRole::Medium), t | 1);
    }

    #[test]
    fn spectrum_shape() {
        let s = SqueezingSpectrum::flat(0.3, (20e3, 3e6)).unwrap();
        assert_eq!(s.r_at(10e3), 0.0);
        assert_eq!(s.r_at(20e3), 0.0);
        assert_eq!(s.r_at(1e6), 0.3);
        assert!((s.r_at(21e3) - 0.15).abs() < 1e-12);
        assert!((s.r_at(2.85e6) - 0.15).abs() < 1e-12);
        assert!(s.r_at(3e6).abs() < 1e-15);
    }

    #[test]
    fn band_above_nyquist_rejected() {
        let s = SqueezingSpectrum::flat(0.3, (20e3, 3e6)).unwrap();
        assert!(synthesize_shot(&s, 64, 1e-6, 1, 0, &TriggerSpec::default()).is_err());
    }
}
