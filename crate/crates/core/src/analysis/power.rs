//! Band-limited noise powers normalized to shot noise.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::filter::BandpassSpec;
use crate::error::{Error, Result};
use crate::fft;
use crate::sim::{ExperimentShot, JointQuadrature, QuadratureTrace};

/// Detection band over which noise powers are integrated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBand {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl Default for NoiseBand {
    fn default() -> Self {
        Self {
            lo_hz: 100e3,
            hi_hz: 2e6,
        }
    }
}

impl NoiseBand {
    pub fn new(lo_hz: f64, hi_hz: f64) -> Result<Self> {
        let b = Self { lo_hz, hi_hz };
        if !(lo_hz > 0.0 && hi_hz > lo_hz && hi_hz.is_finite()) {
            return Err(Error::Band {
                lo: lo_hz,
                hi: hi_hz,
                reason: "need 0 < lo < hi".into(),
            });
        }
        Ok(b)
    }

    /// Positive-frequency FFT bins inside the band for `n` samples at `dt`.
    pub fn bins(&self, n: usize, dt: f64) -> Result<RangeInclusive<usize>> {
        let nyquist = 0.5 / dt;
        if !(self.lo_hz > 0.0 && self.hi_hz > self.lo_hz) || self.hi_hz >= nyquist {
            return Err(Error::Band {
                lo: self.lo_hz,
                hi: self.hi_hz,
                reason: format!("must satisfy 0 < lo < hi < Nyquist ({nyquist} Hz)"),
            });
        }
        let df = 1.0 / (n as f64 * dt);
        let first = (self.lo_hz / df - 1e-9).ceil().max(1.0) as usize;
        let last = (self.hi_hz / df + 1e-9).floor() as usize;
        if last < first || last >= n.div_ceil(2) {
            return Err(Error::Band {
                lo: self.lo_hz,
                hi: self.hi_hz,
                reason: format!("no FFT bins inside the band for {n} samples"),
            });
        }
        Ok(first..=last)
    }
}

/// Per-bin power weights: the filter's `|H|²`, or 1 without a filter.
pub fn band_weights(bins: &RangeInclusive<usize>, n: usize, dt: f64, filter: Option<&BandpassSpec>) -> Vec<f64> {
    bins.clone()
        .map(|k| filter.map_or(1.0, |f| f.response(fft::bin_frequency(k, n, dt)).powi(2)))
        .collect()
}

fn band_energy(samples: &[f64], bins: &RangeInclusive<usize>, weights: &[f64]) -> f64 {
    let s = fft::real_spectrum(samples);
    bins.clone().zip(weights).map(|(k, w)| w * s[k].norm_sqr()).sum()
}

/// Mean filtered band energy of one or more shot-noise traces.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotNoiseLevel {
    pub band: NoiseBand,
    pub filter: Option<BandpassSpec>,
    pub length: usize,
    pub sample_period_s: f64,
    /// Mean over traces of `Σ_band w_k |S_k|²`.
    pub energy: f64,
    pub n_traces: usize,
    /// Effective number of independent bins, `(Σw)²/Σw²`.
    pub effective_bins: f64,
}

impl ShotNoiseLevel {
    pub fn from_traces(traces: &[QuadratureTrace], band: NoiseBand, filter: Option<BandpassSpec>) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| Error::invalid("shot_noise", "need at least one trace"))?;
        for t in &traces[1..] {
            first.check_compatible(t)?;
        }
        let (n, dt) = (first.len(), first.sample_period_s);
        if let Some(f) = &filter {
            f.validate(first.nyquist_hz())?;
        }
        let bins = band.bins(n, dt)?;
        let weights = band_weights(&bins, n, dt, filter.as_ref());
        let energy = traces
            .iter()
            .map(|t| band_energy(&t.samples, &bins, &weights))
            .sum::<f64>()
            / traces.len() as f64;
        if !(energy > 0.0) {
            return Err(Error::Analysis("shot-noise reference has no power in band".into()));
        }
        let sw: f64 = weights.iter().sum();
        let sw2: f64 = weights.iter().map(|w| w * w).sum();
        Ok(Self {
            band,
            filter,
            length: n,
            sample_period_s: dt,
            energy,
            n_traces: traces.len(),
            effective_bins: sw * sw / sw2,
        })
    }

    /// Relative standard error of [`energy`](Self::energy).
    pub fn relative_se(&self) -> f64 {
        1.0 / (self.n_traces as f64 * self.effective_bins).sqrt()
    }

    pub fn check_trace(&self, t: &QuadratureTrace) -> Result<()> {
        if t.len() != self.length || t.sample_period_s != self.sample_period_s {
            return Err(Error::TraceMismatch(format!(
                "trace ({} samples at {} s) differs from the shot-noise reference ({} samples at {} s)",
                t.len(),
                t.sample_period_s,
                self.length,
                self.sample_period_s
            )));
        }
        Ok(())
    }

    /// Filtered band power of `trace` in shot-noise units.
    pub fn normalize(&self, trace: &QuadratureTrace) -> Result<f64> {
        self.check_trace(trace)?;
        let bins = self.band.bins(self.length, self.sample_period_s)?;
        let weights = band_weights(&bins, self.length, self.sample_period_s, self.filter.as_ref());
        Ok(band_energy(&trace.samples, &bins, &weights) / self.energy)
    }
}

/// Periodogram power of `trace` over `band` divided by that of `shot_ref`.
/// Both traces are taken as given (filter them first if required).
pub fn band_power(trace: &QuadratureTrace, band: &NoiseBand, shot_ref: &QuadratureTrace) -> Result<f64> {
    ShotNoiseLevel::from_traces(std::slice::from_ref(shot_ref), *band, None)?.normalize(trace)
}

/// `(a - b)/√2` or `(a + b)/√2`.
pub fn combine(a: &QuadratureTrace, b: &QuadratureTrace, sum: bool) -> Result<QuadratureTrace> {
    a.check_compatible(b)?;
    let sign = if sum { 1.0 } else { -1.0 };
    let mut out = a.clone();
    out.samples = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| FRAC_1_SQRT_2 * (x + sign * y))
        .collect();
    Ok(out)
}

/// `X_- = (X_p - X_c)/√2` or `Y_+ = (Y_p + Y_c)/√2` of a shot.
pub fn joint_trace(shot: &ExperimentShot, joint: JointQuadrature) -> Result<QuadratureTrace> {
    match joint {
        JointQuadrature::XMinus => combine(&shot.probe_x, &shot.conj_x, false),
        JointQuadrature::YPlus => combine(&shot.probe_y, &shot.conj_y, true),
    }
}
