//! Zero-phase detection filter: a first-order high-pass (the AC-coupling LC
//! stage) times a Hann-shaped low-pass taper.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::sim::QuadratureTrace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandpassSpec {
    pub highpass_corner_hz: f64,
    /// Where the taper alone is down to `1/√2` in amplitude.
    pub lowpass_3db_hz: f64,
    /// The taper is flat below this frequency.
    pub taper_start_hz: f64,
}

impl Default for BandpassSpec {
    fn default() -> Self {
        Self {
            highpass_corner_hz: 100e3,
            lowpass_3db_hz: 1.75e6,
            taper_start_hz: 1.0e6,
        }
    }
}

impl BandpassSpec {
    pub fn validate(&self, nyquist_hz: f64) -> Result<()> {
        let ok = self.highpass_corner_hz > 0.0
            && self.highpass_corner_hz < self.lowpass_3db_hz
            && self.taper_start_hz < self.lowpass_3db_hz
            && self.taper_start_hz >= 0.0;
        if !ok {
            return Err(Error::invalid(
                "filter",
                format!(
                    "need 0 < highpass corner ({}) < low-pass -3 dB point ({}) and taper start ({}) below it",
                    self.highpass_corner_hz, self.lowpass_3db_hz, self.taper_start_hz
                ),
            ));
        }
        if self.stopband_hz() >= nyquist_hz {
            return Err(Error::invalid(
                "filter",
                format!(
                    "taper reaches {} Hz, above Nyquist {} Hz",
                    self.stopband_hz(),
                    nyquist_hz
                ),
            ));
        }
        Ok(())
    }

    /// First frequency where the taper reaches zero.
    pub fn stopband_hz(&self) -> f64 {
        // cos²θ = 1/√2 at the -3 dB point fixes the taper length.
        let theta_3db = std::f64::consts::FRAC_1_SQRT_2.sqrt().acos();
        self.taper_start_hz + FRAC_PI_2 * (self.lowpass_3db_hz - self.taper_start_hz) / theta_3db
    }

    pub fn highpass(&self, f: f64) -> f64 {
        let x = f.abs() / self.highpass_corner_hz;
        x / (1.0 + x * x).sqrt()
    }

    pub fn taper(&self, f: f64) -> f64 {
        let f = f.abs();
        let stop = self.stopband_hz();
        if f <= self.taper_start_hz {
            1.0
        } else if f >= stop {
            0.0
        } else {
            let c = (FRAC_PI_2 * (f - self.taper_start_hz) / (stop - self.taper_start_hz)).cos();
            c * c
        }
    }

    /// Amplitude response (real, non-negative).
    pub fn response(&self, f: f64) -> f64 {
        self.highpass(f) * self.taper(f)
    }
}

/// Multiplies the spectrum by [`BandpassSpec::response`].
pub fn bandpass(trace: &QuadratureTrace, spec: &BandpassSpec) -> Result<QuadratureTrace> {
    spec.validate(trace.nyquist_hz())?;
    let n = trace.len();
    let mut out = trace.clone();
    if n == 0 {
        return Ok(out);
    }
    let mut s = fft::real_spectrum(&trace.samples);
    for (k, v) in s.iter_mut().enumerate() {
        let kk = k.min(n - k);
        *v *= spec.response(fft::bin_frequency(kk, n, trace.sample_period_s));
    }
    fft::inverse(&mut s);
    out.samples = s.iter().map(|z| z.re).collect();
    Ok(out)
}
