//! Dispersive gain medium: gain profile, minimum-phase (Kramers–Kronig)
//! phase, group delay, and the interpolated transfer function applied by the
//! trace simulator.
//!
//! Frequencies are sideband (two-photon) detunings in Hz. The transfer
//! function follows the synthesis convention `x(t) = ∫ X(f) e^{+2πift} df`,
//! under which a causal minimum-phase response has `φ = -H[ln|t|]` and
//! `τ_g = -dφ/d(2πf)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Largest tolerated `|G - 1|` at the first and last grid point.
pub const DEFAULT_EDGE_TOLERANCE: f64 = 1e-3;

/// Zero-filled window length for the Hilbert transform, in grid lengths.
pub const DEFAULT_PADDING_FACTOR: usize = 4;

/// Uniform, strictly increasing frequency grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start_hz: f64,
    pub step_hz: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn new(start_hz: f64, step_hz: f64, len: usize) -> Result<Self> {
        if !start_hz.is_finite() || !(step_hz.is_finite() && step_hz > 0.0) {
            return Err(Error::Grid(format!(
                "start {start_hz} / step {step_hz} must be finite with step > 0"
            )));
        }
        if len < 3 {
            return Err(Error::Grid(format!("need at least 3 points, got {len}")));
        }
        Ok(Self { start_hz, step_hz, len })
    }

    /// Grid covering `[min_hz, max_hz]` inclusive at `step_hz`.
    pub fn spanning(min_hz: f64, max_hz: f64, step_hz: f64) -> Result<Self> {
        if !(max_hz > min_hz) {
            return Err(Error::Grid(format!("max {max_hz} must exceed min {min_hz}")));
        }
        let len = ((max_hz - min_hz) / step_hz + 1e-9).floor() as usize + 1;
        Self::new(min_hz, step_hz, len)
    }

    /// Recovers the grid from explicit frequencies, rejecting non-uniform or
    /// non-increasing input.
    pub fn from_points(freq: &[f64]) -> Result<Self> {
        if freq.len() < 3 {
            return Err(Error::Grid(format!("need at least 3 points, got {}", freq.len())));
        }
        let step = (freq[freq.len() - 1] - freq[0]) / (freq.len() - 1) as f64;
        if !(step > 0.0) {
            return Err(Error::Grid("frequencies must be strictly increasing".into()));
        }
        for (i, w) in freq.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Grid(format!(
                    "frequencies not strictly increasing at row {}",
                    i + 1
                )));
            }
        }
        for (i, &f) in freq.iter().enumerate() {
            let expected = freq[0] + i as f64 * step;
            if (f - expected).abs() > 1e-6 * step {
                return Err(Error::Grid(format!(
                    "non-uniform spacing at row {i} ({f} Hz, expected {expected} Hz)"
                )));
            }
        }
        Self::new(freq[0], step, freq.len())
    }

    pub fn freq(&self, i: usize) -> f64 {
        self.start_hz + i as f64 * self.step_hz
    }

    pub fn end_hz(&self) -> f64 {
        self.freq(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.freq(i)).collect()
    }

    pub fn contains(&self, f: f64) -> bool {
        let tol = 1e-9 * self.step_hz;
        f >= self.start_hz - tol && f <= self.end_hz() + tol
    }

    /// Fractional index of `f`.
    fn position(&self, f: f64) -> f64 {
        (f - self.start_hz) / self.step_hz
    }
}

/// Lorentzian gain line `peak·γ²/((f-f₀)² + γ²)` added to unit transmission.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzianLine {
    pub center_hz: f64,
    /// Half width at half maximum.
    pub width_hz: f64,
    pub peak_gain: f64,
}

impl LorentzianLine {
    pub fn new(center_hz: f64, width_hz: f64, peak_gain: f64) -> Result<Self> {
        let line = Self {
            center_hz,
            width_hz,
            peak_gain,
        };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center_hz.is_finite() {
            return Err(Error::invalid("center_hz", "must be finite"));
        }
        if !(self.width_hz.is_finite() && self.width_hz > 0.0) {
            return Err(Error::invalid(
                "width_hz",
                format!("must be > 0, got {}", self.width_hz),
            ));
        }
        if !(self.peak_gain.is_finite() && self.peak_gain >= 0.0) {
            return Err(Error::invalid(
                "peak_gain",
                format!("must be >= 0, got {}", self.peak_gain),
            ));
        }
        Ok(())
    }

    pub fn excess_gain(&self, f: f64) -> f64 {
        let d = f - self.center_hz;
        let w2 = self.width_hz * self.width_hz;
        self.peak_gain * w2 / (d * d + w2)
    }
}

/// Intensity gain sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GainProfile {
    grid: FrequencyGrid,
    gain: Vec<f64>,
}

impl GainProfile {
    pub fn new(grid: FrequencyGrid, gain: Vec<f64>) -> Result<Self> {
        if gain.len() != grid.len {
            return Err(Error::Grid(format!(
                "{} gain values for {} grid points",
                gain.len(),
                grid.len
            )));
        }
        if let Some((i, g)) = gain.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::invalid(
                "gain",
                format!("row {i}: gain must be finite and >= 0, got {g}"),
            ));
        }
        Ok(Self { grid, gain })
    }

    pub fn from_points(freq: &[f64], gain: Vec<f64>) -> Result<Self> {
        Self::new(FrequencyGrid::from_points(freq)?, gain)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    /// Larger of `|G - 1|` at the two grid ends.
    pub fn edge_deviation(&self) -> f64 {
        let first = (self.gain[0] - 1.0).abs();
        let last = (self.gain[self.gain.len() - 1] - 1.0).abs();
        first.max(last)
    }

    /// Linear interpolation of the gain; `None` outside the grid.
    pub fn gain_at(&self, f: f64) -> Option<f64> {
        interpolate(&self.grid, &self.gain, f)
    }
}

/// `G(f) = 1 + Σ lines`. Every line center must lie strictly inside the grid.
pub fn synth_gain_profile(lines: &[LorentzianLine], grid: &FrequencyGrid) -> Result<GainProfile> {
    for line in lines {
        line.validate()?;
        if !(line.center_hz > grid.start_hz && line.center_hz < grid.end_hz()) {
            return Err(Error::Grid(format!(
                "line at {} Hz is outside the grid interior ({} .. {} Hz)",
                line.center_hz,
                grid.start_hz,
                grid.end_hz()
            )));
        }
    }
    let gain = grid
        .points()
        .into_iter()
        .map(|f| 1.0 + lines.iter().map(|l| l.excess_gain(f)).sum::<f64>())
        .collect();
    GainProfile::new(*grid, gain)
}

/// Complex transfer function of the amplifying medium plus the vacuum noise
/// it must add.
#[derive(Clone, Debug, PartialEq)]
pub struct MediumResponse {
    grid: FrequencyGrid,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
    group_delay: Vec<f64>,
    noise_coupling: Vec<f64>,
}

/// Interpolated medium response at one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transfer {
    pub amplitude: f64,
    pub phase: f64,
    pub noise_coupling: f64,
}

impl Transfer {
    pub fn complex(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

impl MediumResponse {
    /// Builds a response from a gain profile and an explicit phase. Group
    /// delay comes from finite differences of the phase. Requires `G >= 1`
    /// everywhere (attenuation is a different channel).
    pub fn from_gain_and_phase(grid: FrequencyGrid, gain: &[f64], phase: Vec<f64>) -> Result<Self> {
        if gain.len() != grid.len || phase.len() != grid.len {
            return Err(Error::Grid("gain/phase length differs from grid".into()));
        }
        if let Some((i, g)) = gain.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g >= 1.0)) {
            return Err(Error::invalid(
                "gain",
                format!("row {i}: medium gain must be >= 1 (got {g}); attenuating media are not modeled"),
            ));
        }
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("phase", "non-finite phase"));
        }
        let group_delay = group_delay_from_phase(&phase, grid.step_hz);
        Ok(Self {
            grid,
            amplitude: gain.iter().map(|g| g.sqrt()).collect(),
            noise_coupling: gain.iter().map(|g| (g - 1.0).max(0.0)).collect(),
            phase,
            group_delay,
        })
    }

    /// Frequency-independent gain with zero phase. Not KK-consistent unless
    /// `gain == 1`; useful for isolating the noise channel.
    pub fn flat(grid: FrequencyGrid, gain: f64) -> Result<Self> {
        Self::from_gain_and_phase(grid, &vec![gain; grid.len], vec![0.0; grid.len])
    }

    /// Reassembles a response from stored columns, checking
    /// `amplitude² - noise_coupling = 1` at every point.
    pub fn from_columns(
        grid: FrequencyGrid,
        amplitude: Vec<f64>,
        phase: Vec<f64>,
        group_delay: Vec<f64>,
        noise_coupling: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.len;
        if [amplitude.len(), phase.len(), group_delay.len(), noise_coupling.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::Grid("column lengths differ from grid".into()));
        }
        for i in 0..n {
            let vals = [amplitude[i], phase[i], group_delay[i], noise_coupling[i]];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("response", format!("row {i}: non-finite value")));
            }
            let residual = amplitude[i] * amplitude[i] - noise_coupling[i] - 1.0;
            if residual.abs() > 1e-9 {
                return Err(Error::invalid(
                    "noise_coupling",
                    format!("row {i}: amplitude² - noise_coupling = {} (expected 1)", residual + 1.0),
                ));
            }
        }
        Ok(Self {
            grid,
            amplitude,
            phase,
            group_delay,
            noise_coupling,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn group_delay(&self) -> &[f64] {
        &self.group_delay
    }

    pub fn noise_coupling(&self) -> &[f64] {
        &self.noise_coupling
    }

    pub fn gain(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a * a).collect()
    }

    /// Unit amplitude, zero phase and no added noise at every grid point.
    pub fn is_identity(&self) -> bool {
        self.amplitude.iter().all(|&a| a == 1.0)
            && self.phase.iter().all(|&p| p == 0.0)
            && self.noise_coupling.iter().all(|&c| c == 0.0)
    }
}

/// Options for [`kramers_kronig_phase_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KkOptions {
    pub edge_tolerance: f64,
    pub padding_factor: usize,
}

impl Default for KkOptions {
    fn default() -> Self {
        Self {
            edge_tolerance: DEFAULT_EDGE_TOLERANCE,
            padding_factor: DEFAULT_PADDING_FACTOR,
        }
    }
}

/// Minimum-phase response of a gain profile with default options.
pub fn kramers_kronig_phase(profile: &GainProfile) -> Result<MediumResponse> {
    kramers_kronig_phase_with(profile, KkOptions::default())
}

/// `φ = -H[ln √G]`, the Hilbert transform evaluated by FFT with the grid
/// centered in a zero-filled window `padding_factor` times its length.
pub fn kramers_kronig_phase_with(profile: &GainProfile, opts: KkOptions) -> Result<MediumResponse> {
    let deviation = profile.edge_deviation();
    if !(deviation <= opts.edge_tolerance) {
        return Err(Error::EdgeNotSettled {
            deviation,
            tolerance: opts.edge_tolerance,
        });
    }
    if let Some((i, g)) = profile.gain.iter().enumerate().find(|(_, g)| **g < 1.0) {
        return Err(Error::invalid(
            "gain",
            format!("row {i}: medium gain must be >= 1 (got {g}); attenuating media are not modeled"),
        ));
    }
    let log_amplitude: Vec<f64> = profile.gain.iter().map(|g| 0.5 * g.ln()).collect();
    let phase = hilbert_transform(&log_amplitude, opts.padding_factor.max(1))
        .into_iter()
        .map(|h| -h)
        .collect();
    MediumResponse::from_gain_and_phase(profile.grid, &profile.gain, phase)
}

/// Discrete Hilbert transform `H[u](x) = (1/π) p.v. ∫ u(x')/(x - x') dx'`,
/// with `H[cos] = sin`, computed on a zero-padded periodic window.
pub fn hilbert_transform(u: &[f64], padding_factor: usize) -> Vec<f64> {
    let m = u.len();
    if m == 0 {
        return Vec::new();
    }
    let len = fft::next_fast_len(m * padding_factor.max(1));
    let start = (len - m) / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (slot, &v) in buf[start..start + m].iter_mut().zip(u) {
        slot.re = v;
    }
    fft::forward(&mut buf);
    let minus_i = Complex64::new(0.0, -1.0);
    buf[0] = Complex64::new(0.0, 0.0);
    for k in 1..len {
        if 2 * k < len {
            buf[k] *= minus_i;
        } else if 2 * k > len {
            buf[k] *= -minus_i;
        } else {
            buf[k] = Complex64::new(0.0, 0.0);
        }
    }
    fft::inverse(&mut buf);
    buf[start..start + m].iter().map(|z| z.re).collect()
}

/// `τ_g = -dφ/d(2πf)`: centered differences inside, one-sided at the ends.
pub fn group_delay_from_phase(phase: &[f64], step_hz: f64) -> Vec<f64> {
    let n = phase.len();
    let omega_step = 2.0 * std::f64::consts::PI * step_hz;
    (0..n)
        .map(|i| {
            if n < 2 {
                0.0
            } else if i == 0 {
                -(phase[1] - phase[0]) / omega_step
            } else if i == n - 1 {
                -(phase[n - 1] - phase[n - 2]) / omega_step
            } else {
                -(phase[i + 1] - phase[i - 1]) / (2.0 * omega_step)
            }
        })
        .collect()
}

/// Gain-weighted mean group delay over grid points in `[lo_hz, hi_hz]`.
/// Negative values are advances.
pub fn group_delay_in_band(resp: &MediumResponse, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    if !(hi_hz > lo_hz) {
        return Err(Error::Band {
            lo: lo_hz,
            hi: hi_hz,
            reason: "empty band".into(),
        });
    }
    if !resp.grid.contains(lo_hz) || !resp.grid.contains(hi_hz) {
        return Err(Error::Band {
            lo: lo_hz,
            hi: hi_hz,
            reason: "band extends beyond the response grid".into(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..resp.grid.len {
        let f = resp.grid.freq(i);
        if f >= lo_hz && f <= hi_hz {
            let g = resp.amplitude[i] * resp.amplitude[i];
            num += g * resp.group_delay[i];
            den += g;
        }
    }
    if den == 0.0 {
        return Err(Error::Band {
            lo: lo_hz,
            hi: hi_hz,
            reason: "no grid points inside band".into(),
        });
    }
    Ok(num / den)
}

/// Linear interpolation of amplitude and phase at `f`. The noise coupling
/// follows from the amplitude so `|t|² - N = 1` holds between grid points too.
pub fn transfer_at(resp: &MediumResponse, f: f64) -> Result<Transfer> {
    let amplitude = interpolate(&resp.grid, &resp.amplitude, f).ok_or(Error::OutOfGrid(f))?;
    let phase = interpolate(&resp.grid, &resp.phase, f).ok_or(Error::OutOfGrid(f))?;
    let noise_coupling = (amplitude * amplitude - 1.0).max(0.0);
    Ok(Transfer {
        amplitude,
        phase,
        noise_coupling,
    })
}

fn interpolate(grid: &FrequencyGrid, values: &[f64], f: f64) -> Option<f64> {
    if !f.is_finite() || !grid.contains(f) {
        return None;
    }
    let x = grid.position(f).clamp(0.0, (grid.len - 1) as f64);
    let i = (x.floor() as usize).min(grid.len - 1);
    let frac = x - i as f64;
    if frac == 0.0 || i + 1 >= grid.len {
        return Some(values[i]);
    }
    Some(values[i] * (1.0 - frac) + values[i + 1] * frac)
}

/// Fraction of the energy of the reconstructed impulse response
/// `h = F⁻¹[t(f) - 1]` found at negative times. The direct-transmission delta
/// is removed so the metric only sees the dispersive part. Where the grid is
/// one-sided, negative frequencies are filled by Hermitian symmetry;
/// frequencies covered by neither side are transparent.
pub fn causality_leakage(resp: &MediumResponse) -> f64 {
    let grid = resp.grid;
    let reach = grid.start_hz.abs().max(grid.end_hz().abs());
    let half = (reach / grid.step_hz).ceil() as usize + 1;
    let len = fft::next_fast_len(DEFAULT_PADDING_FACTOR * 2 * half);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, slot) in buf.iter_mut().enumerate() {
        let f = if 2 * k <= len { k as f64 } else { k as f64 - len as f64 } * grid.step_hz;
        let value = if let Ok(t) = transfer_at(resp, f) {
            t.complex()
        } else if let Ok(t) = transfer_at(resp, -f) {
            t.complex().conj()
        } else {
            Complex64::new(1.0, 0.0)
        };
        *slot = value - 1.0;
    }
    fft::inverse(&mut buf);
    let total: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let negative: f64 = buf[len / 2 + 1..].iter().map(|z| z.norm_sqr()).sum();
    negative / total
}

/// Calibration target for a symmetric gain doublet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubletTarget {
    /// Lines sit at `±half_separation_hz`.
    pub half_separation_hz: f64,
    /// Frequency where the gain is pinned.
    pub gain_probe_hz: f64,
    pub gain_at_probe: f64,
    pub band_hz: (f64, f64),
    pub group_delay_s: f64,
}

/// Finds the line width (and the peak that pins the gain at
/// `gain_probe_hz`) for which the band-averaged group delay hits the target.
pub fn calibrate_doublet(grid: &FrequencyGrid, target: &DoubletTarget) -> Result<[LorentzianLine; 2]> {
    let f0 = target.half_separation_hz;
    if !(f0 > 0.0) || !(target.gain_at_probe > 1.0) {
        return Err(Error::invalid(
            "doublet",
            "need half separation > 0 and gain at probe > 1",
        ));
    }
    let lines_for = |width: f64| -> Result<[LorentzianLine; 2]> {
        let shape = |c: f64| {
            let d = target.gain_probe_hz - c;
            width * width / (d * d + width * width)
        };
        let peak = (target.gain_at_probe - 1.0) / (shape(f0) + shape(-f0));
        Ok([
            LorentzianLine::new(-f0, width, peak)?,
            LorentzianLine::new(f0, width, peak)?,
        ])
    };
    let delay_for = |width: f64| -> Result<f64> {
        let resp = kramers_kronig_phase(&synth_gain_profile(&lines_for(width)?, grid)?)?;
        group_delay_in_band(&resp, target.band_hz.0, target.band_hz.1)
    };
    let mut lo = 4.0 * grid.step_hz;
    let mut hi = f0;
    let (d_lo, d_hi) = (
        delay_for(lo)? - target.group_delay_s,
        delay_for(hi)? - target.group_delay_s,
    );
    if d_lo.signum() == d_hi.signum() {
        return Err(Error::Analysis(format!(
            "target delay {} s not bracketed by widths {lo}..{hi} Hz",
            target.group_delay_s
        )));
    }
    let rising = d_hi > d_lo;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let above = delay_for(mid)? > target.group_delay_s;
        if above == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-6 * hi {
            break;
        }
    }
    lines_for(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::spanning(-50e6, 50e6, 20e3).unwrap()
    }

    #[test]
    fn empty_line_list_is_transparent() {
        let p = synth_gain_profile(&[], &grid()).unwrap();
        assert!(p.gain().iter().all(|&g| g == 1.0));
        let resp = kramers_kronig_phase(&p).unwrap();
        assert!(resp.phase().iter().all(|&x| x == 0.0));
        assert!(resp.group_delay().iter().all(|&x| x == 0.0));
        assert!(resp.is_identity());
        let t = transfer_at(&resp, 1.234e6).unwrap();
        assert_eq!(t.complex(), Complex64::new(1.0, 0.0));
        assert_eq!(t.noise_coupling, 0.0);
    }

    #[test]
    fn single_line_peak_gain() {
        let line = LorentzianLine::new(0.0, 1e6, 0.1).unwrap();
        let p = synth_gain_profile(&[line], &grid()).unwrap();
        assert!((p.gain_at(0.0).unwrap() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn line_outside_grid_rejected() {
        let line = LorentzianLine::new(60e6, 1e6, 0.1).unwrap();
        assert!(matches!(synth_gain_profile(&[line], &grid()), Err(Error::Grid(_))));
        assert!(LorentzianLine::new(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn doublet_is_even() {
        let lines = [
            LorentzianLine::new(-5e6, 1e6, 0.5).unwrap(),
            LorentzianLine::new(5e6, 1e6, 0.5).unwrap(),
        ];
        let p = synth_gain_profile(&lines, &grid()).unwrap();
        let g = p.gain();
        let n = g.len();
        for i in 0..n {
            assert!((g[i] - g[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn unsettled_edges_rejected() {
        let line = LorentzianLine::new(0.0, 20e6, 1.0).unwrap();
        let p = synth_gain_profile(&[line], &grid()).unwrap();
        assert!(matches!(kramers_kronig_phase(&p), Err(Error::EdgeNotSettled { .. })));
    }

    #[test]
    fn interpolation_rules() {
        let g = FrequencyGrid::new(0.0, 1.0, 3).unwrap();
        let resp = MediumResponse::from_gain_and_phase(g, &[1.0, 4.0, 9.0], vec![0.0, 1.0, 3.0]).unwrap();
        let t = transfer_at(&resp, 1.0).unwrap();
        assert_eq!(t.amplitude, 2.0);
        assert_eq!(t.phase, 1.0);
        assert_eq!(t.noise_coupling, 3.0);
        let mid = transfer_at(&resp, 1.5).unwrap();
        assert_eq!(mid.amplitude, 2.5);
        assert_eq!(mid.phase, 2.0);
        assert_eq!(mid.noise_coupling, 5.25);
        assert!(matches!(transfer_at(&resp, 2.5), Err(Error::OutOfGrid(_))));
        assert!(transfer_at(&resp, -0.1).is_err());
    }

    #[test]
    fn nonuniform_points_rejected() {
        assert!(FrequencyGrid::from_points(&[0.0, 1.0, 2.5, 3.0]).is_err());
        assert!(FrequencyGrid::from_points(&[0.0, 1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn empty_band_rejected() {
        let resp = kramers_kronig_phase(&synth_gain_profile(&[], &grid()).unwrap()).unwrap();
        assert!(group_delay_in_band(&resp, 1e6, 1e6).is_err());
        assert!(group_delay_in_band(&resp, 1e6, 90e6).is_err());
        assert_eq!(group_delay_in_band(&resp, 0.1e6, 2e6).unwrap(), 0.0);
    }

    #[test]
    fn hilbert_of_cosine_is_sine() {
        // A whole number of periods in the unpadded window keeps this exact.
        let n = 64;
        let u: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 4.0 * i as f64 / n as f64).cos())
            .collect();
        let h = hilbert_transform(&u, 1);
        for (i, v) in h.iter().enumerate() {
            let expect = (2.0 * std::f64::consts::PI * 4.0 * i as f64 / n as f64).sin();
            assert!((v - expect).abs() < 1e-12);
        }
    }
}
