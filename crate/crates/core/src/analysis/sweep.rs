//! Delay sweeps of squeezing, inseparability, mutual information and the
//! twin-beam cross-correlation.
//!
//! Each shot is reduced once to its filtered positive-frequency spectra.
//! Shifting the lagged mode by `n` samples (circularly) multiplies its
//! spectrum by `e^{+2πikn/N}`, so every quantity at every lag follows from
//! per-bin cross products without touching the time traces again. A
//! positive delay means the lagged mode's trace is read `n` samples later:
//! a curve peaking at `+τ` says that mode arrives `τ` late.
//!
//! Only bins inside the band enter the covariance, so DC (the trace mean) is
//! excluded by construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::filter::BandpassSpec;
use super::peaks::{
    edge_timing, fit_peak, locate_peak, EdgeLevel, EdgeTiming, Extremum, PeakLocation, PeakSet, TimeAxis,
};
use super::power::{NoiseBand, ShotNoiseLevel};
use crate::error::{Error, Result};
use crate::fft;
use crate::gaussian::{joint_variances, mutual_information_within, Mode, TwoModeCovariance};
use crate::sim::{ExperimentShot, JointQuadrature};
use crate::stats::{sample_std, MeanSem};

/// Integer-sample delays `min, min+step, …` (in samples).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagGrid {
    pub min: i64,
    pub step: i64,
    pub len: usize,
    pub sample_period_s: f64,
}

impl LagGrid {
    pub fn new(min: i64, max: i64, step: i64, sample_period_s: f64) -> Result<Self> {
        if step <= 0 || max < min {
            return Err(Error::invalid(
                "delays",
                format!("need step > 0 and max >= min (got {min}..{max} step {step})"),
            ));
        }
        Ok(Self {
            min,
            step,
            len: ((max - min) / step) as usize + 1,
            sample_period_s,
        })
    }

    /// Delay grid given in seconds; every value must be a whole number of
    /// sample periods.
    pub fn from_delays(min_s: f64, max_s: f64, step_s: f64, sample_period_s: f64) -> Result<Self> {
        let to_samples = |name: &'static str, t: f64| -> Result<i64> {
            let x = t / sample_period_s;
            let r = x.round();
            if !x.is_finite() || (x - r).abs() > 1e-6 * r.abs().max(1.0) {
                return Err(Error::invalid(
                    name,
                    format!("{t} s is not a multiple of the sample period {sample_period_s} s"),
                ));
            }
            Ok(r as i64)
        };
        Self::new(
            to_samples("delay_min", min_s)?,
            to_samples("delay_max", max_s)?,
            to_samples("delay_step", step_s)?,
            sample_period_s,
        )
    }

    pub fn lag(&self, i: usize) -> i64 {
        self.min + i as i64 * self.step
    }

    pub fn max(&self) -> i64 {
        self.lag(self.len - 1)
    }

    pub fn delay_s(&self, i: usize) -> f64 {
        self.lag(i) as f64 * self.sample_period_s
    }

    pub fn delays_s(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.delay_s(i)).collect()
    }

    pub fn axis(&self) -> TimeAxis {
        TimeAxis {
            start_s: self.min as f64 * self.sample_period_s,
            step_s: self.step as f64 * self.sample_period_s,
            len: self.len,
        }
    }

    /// Index of lag `lag`, if on the grid.
    pub fn index_of(&self, lag: i64) -> Option<usize> {
        let d = lag - self.min;
        (d >= 0 && d % self.step == 0 && ((d / self.step) as usize) < self.len).then(|| (d / self.step) as usize)
    }

    pub fn check_trace_length(&self, n: usize) -> Result<()> {
        let reach = self.min.unsigned_abs().max(self.max().unsigned_abs());
        if reach as usize >= n {
            return Err(Error::invalid(
                "delays",
                format!("|delay| of {reach} samples reaches the trace length {n}"),
            ));
        }
        Ok(())
    }
}

/// Common sweep settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub band: NoiseBand,
    pub filter: Option<BandpassSpec>,
    /// Mode whose trace is shifted; normally the one that went through the
    /// medium.
    pub lagged_mode: Mode,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            band: NoiseBand::default(),
            filter: Some(BandpassSpec::default()),
            lagged_mode: Mode::Conjugate,
        }
    }
}

/// Filtered positive-frequency spectra of one shot, bins `1..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotSpectra {
    pub length: usize,
    pub sample_period_s: f64,
    pub squeezed_joint: JointQuadrature,
    /// Spectra of `(X_p, Y_p, X_c, Y_c)` times the filter response.
    pub spectra: [Vec<Complex64>; 4],
    /// Stored-index range of the noise band.
    band: (usize, usize),
    /// Stored-index range used for the cross-correlation: the filter's
    /// support, or the noise band without a filter.
    xcorr: (usize, usize),
    band_spec: NoiseBand,
    filter: Option<BandpassSpec>,
}

impl ShotSpectra {
    pub fn new(shot: &ExperimentShot, band: NoiseBand, filter: Option<BandpassSpec>) -> Result<Self> {
        shot.validate()?;
        let n = shot.len();
        let dt = shot.sample_period_s();
        if let Some(f) = &filter {
            f.validate(0.5 / dt)?;
        }
        let band_bins = band.bins(n, dt)?;
        let (b0, b1) = (*band_bins.start(), *band_bins.end());
        let last_usable = n.div_ceil(2) - 1;
        let (x0, x1) = match &filter {
            Some(f) => {
                let stop = (f.stopband_hz() * n as f64 * dt).ceil() as usize;
                (1, stop.min(last_usable))
            }
            None => (b0, b1),
        };
        let k_max = b1.max(x1);
        let (sx_p, sx_c) = fft::real_pair_spectra(&shot.probe_x.samples, &shot.conj_x.samples);
        let (sy_p, sy_c) = fft::real_pair_spectra(&shot.probe_y.samples, &shot.conj_y.samples);
        let gain: Vec<f64> = (1..=k_max)
            .map(|k| {
                filter
                    .as_ref()
                    .map_or(1.0, |f| f.response(fft::bin_frequency(k, n, dt)))
            })
            .collect();
        let take = |s: &[Complex64]| -> Vec<Complex64> { (1..=k_max).zip(&gain).map(|(k, g)| s[k] * *g).collect() };
        Ok(Self {
            length: n,
            sample_period_s: dt,
            squeezed_joint: shot.squeezed_joint,
            spectra: [take(&sx_p), take(&sy_p), take(&sx_c), take(&sy_c)],
            band: (b0 - 1, b1 - 1),
            xcorr: (x0 - 1, x1 - 1),
            band_spec: band,
            filter,
        })
    }

    fn check_level(&self, sn: &ShotNoiseLevel) -> Result<()> {
        if sn.length != self.length || sn.sample_period_s != self.sample_period_s {
            return Err(Error::TraceMismatch(format!(
                "shot ({} samples at {} s) and shot-noise reference ({} samples at {} s) differ",
                self.length, self.sample_period_s, sn.length, sn.sample_period_s
            )));
        }
        if sn.band != self.band_spec || sn.filter != self.filter {
            return Err(Error::Analysis(
                "shot-noise reference was built with a different band or filter".into(),
            ));
        }
        Ok(())
    }

    fn index(mode: Mode, y: bool) -> usize {
        mode.offset() + y as usize
    }

    /// Covariance matrix at one lag, normalized to shot noise.
    pub fn covariance_at(&self, lag: i64, lagged: Mode, sn: &ShotNoiseLevel) -> Result<TwoModeCovariance> {
        self.check_level(sn)?;
        let grid = LagGrid::new(lag, lag, 1, self.sample_period_s)?;
        let sums = self.lagged_sums(&grid, lagged);
        Ok(self.assemble(&sums, 0, lagged, sn))
    }

    fn static_sum(&self, a: usize, b: usize) -> f64 {
        let (s, e) = self.band;
        let (u, v) = (&self.spectra[a], &self.spectra[b]);
        (s..=e).map(|i| (u[i].conj() * v[i]).re).sum()
    }

    /// For each lag: the four band cross sums `Re Σ conj(F_a)·L_b·z^n`
    /// (`a, b ∈ {x, y}`), then the x-x and y-y sums over the correlation
    /// range.
    fn lagged_sums(&self, lags: &LagGrid, lagged: Mode) -> Vec<[f64; 6]> {
        let fixed = lagged.other();
        let f = [
            &self.spectra[Self::index(fixed, false)],
            &self.spectra[Self::index(fixed, true)],
        ];
        let l = [
            &self.spectra[Self::index(lagged, false)],
            &self.spectra[Self::index(lagged, true)],
        ];
        let mut out = vec![[0.0; 6]; lags.len];
        let lo = self.band.0.min(self.xcorr.0);
        let hi = self.band.1.max(self.xcorr.1);
        let omega = 2.0 * std::f64::consts::PI / self.length as f64;
        for i in lo..=hi {
            let k = (i + 1) as f64;
            let in_band = i >= self.band.0 && i <= self.band.1;
            let in_xcorr = i >= self.xcorr.0 && i <= self.xcorr.1;
            let p = [
                f[0][i].conj() * l[0][i],
                f[0][i].conj() * l[1][i],
                f[1][i].conj() * l[0][i],
                f[1][i].conj() * l[1][i],
            ];
            let mut z = Complex64::from_polar(1.0, omega * k * lags.min as f64);
            let dz = Complex64::from_polar(1.0, omega * k * lags.step as f64);
            for acc in out.iter_mut() {
                if in_band {
                    for (a, pp) in acc[..4].iter_mut().zip(&p) {
                        *a += (pp * z).re;
                    }
                }
                if in_xcorr {
                    acc[4] += (p[0] * z).re;
                    acc[5] += (p[3] * z).re;
                }
                z *= dz;
            }
        }
        out
    }

    fn assemble(&self, sums: &[[f64; 6]], j: usize, lagged: Mode, sn: &ShotNoiseLevel) -> TwoModeCovariance {
        let mut m = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in a..4 {
                if a / 2 == b / 2 {
                    m[a][b] = self.static_sum(a, b) / sn.energy;
                    m[b][a] = m[a][b];
                }
            }
        }
        let fixed = lagged.other();
        for (c, (ya, yb)) in [(false, false), (false, true), (true, false), (true, true)]
            .into_iter()
            .enumerate()
        {
            let (r, s) = (Self::index(fixed, ya), Self::index(lagged, yb));
            m[r][s] = sums[j][c] / sn.energy;
            m[s][r] = m[r][s];
        }
        TwoModeCovariance::symmetrized(m)
    }

    fn xcorr_norms(&self, lagged: Mode) -> [f64; 2] {
        let (s, e) = self.xcorr;
        let energy = |idx: usize| -> f64 { self.spectra[idx][s..=e].iter().map(|z| z.norm_sqr()).sum() };
        let fixed = lagged.other();
        let nx = (energy(Self::index(fixed, false)) * energy(Self::index(lagged, false))).sqrt();
        let ny = (energy(Self::index(fixed, true)) * energy(Self::index(lagged, true))).sqrt();
        [nx, ny]
    }

    /// Number of bins in the noise band.
    pub fn band_bins(&self) -> usize {
        self.band.1 - self.band.0 + 1
    }
}

/// One-sigma spread of a symplectic eigenvalue estimated from `n_shots`
/// shots of `bins` effective bins each, with a shot-noise normalization of
/// relative error `rel_sn`.
pub fn symplectic_sigma(nu: f64, bins: f64, n_shots: usize, rel_sn: f64) -> f64 {
    nu * (2.0 / (bins * n_shots as f64) + rel_sn * rel_sn).sqrt()
}

/// Upper triangle of a symmetric 4×4 matrix, row by row.
pub type PackedCovariance = [f64; 10];

const PACKED_INDEX: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

pub fn pack(cov: &TwoModeCovariance) -> PackedCovariance {
    PACKED_INDEX.map(|(i, j)| cov.get(i, j))
}

pub fn unpack(p: &PackedCovariance) -> TwoModeCovariance {
    let mut m = [[0.0; 4]; 4];
    for (v, (i, j)) in p.iter().zip(PACKED_INDEX) {
        m[i][j] = *v;
        m[j][i] = *v;
    }
    TwoModeCovariance::symmetrized(m)
}

/// Per-lag values from one shot.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotSweep {
    pub inseparability: Vec<f64>,
    /// Variance of the shot's labelled joint quadrature, in dB.
    pub squeezing_db: Vec<f64>,
    /// `(ρ_XX - ρ_YY)/2` with globally normalized correlations.
    pub xcorr: Vec<f64>,
    /// Covariance estimate at every lag.
    pub covariances: Vec<PackedCovariance>,
}

/// Sweeps one shot over `lags`.
pub fn sweep_shot(spec: &ShotSpectra, lags: &LagGrid, lagged: Mode, sn: &ShotNoiseLevel) -> Result<ShotSweep> {
    spec.check_level(sn)?;
    lags.check_trace_length(spec.length)?;
    if lags.sample_period_s != spec.sample_period_s {
        return Err(Error::TraceMismatch(
            "delay grid and trace sample periods differ".into(),
        ));
    }
    let sums = spec.lagged_sums(lags, lagged);
    let norms = spec.xcorr_norms(lagged);
    let mut out = ShotSweep {
        inseparability: Vec::with_capacity(lags.len),
        squeezing_db: Vec::with_capacity(lags.len),
        xcorr: Vec::with_capacity(lags.len),
        covariances: Vec::with_capacity(lags.len),
    };
    for j in 0..lags.len {
        let cov = spec.assemble(&sums, j, lagged, sn);
        let (vx, vy) = joint_variances(&cov);
        out.inseparability.push(vx + vy);
        let v = match spec.squeezed_joint {
            JointQuadrature::XMinus => vx,
            JointQuadrature::YPlus => vy,
        };
        out.squeezing_db.push(10.0 * v.log10());
        out.covariances.push(pack(&cov));
        let xx = if norms[0] > 0.0 { sums[j][4] / norms[0] } else { 0.0 };
        let yy = if norms[1] > 0.0 { sums[j][5] / norms[1] } else { 0.0 };
        out.xcorr.push(0.5 * (xx - yy));
    }
    Ok(out)
}

/// Part of the mutual-information peak used to fit its vertex.
pub const MI_PEAK_FRACTION: f64 = 0.1;

/// Mutual information of an estimated covariance. Symplectic eigenvalues
/// that sampling noise pushed below 1 contribute zero entropy; whether the
/// dip is larger than the noise explains is reported separately.
fn estimated_mi(cov: &TwoModeCovariance) -> f64 {
    mutual_information_within(cov, 1.0).unwrap_or(f64::NAN)
}

fn jackknife_sem(loo: &[f64]) -> f64 {
    let n = loo.len();
    if n < 2 {
        return 0.0;
    }
    let m = loo.iter().sum::<f64>() / n as f64;
    ((n - 1) as f64 / n as f64 * loo.iter().map(|x| (x - m) * (x - m)).sum::<f64>()).sqrt()
}

/// Shift of a peak between two conditions with a jackknife error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakShift {
    pub shift_s: f64,
    pub sem_s: f64,
    pub paired: bool,
}

/// Mean curves and peak statistics over a set of shots.
///
/// Inseparability, squeezing and cross-correlation are averaged shot by
/// shot. Mutual information, which is strongly nonlinear near a pure state,
/// is evaluated on the covariance pooled over all shots; its errors are
/// leave-one-shot-out jackknife estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelaySweepResult {
    pub lags: LagGrid,
    pub lagged_mode: Mode,
    pub n_shots: usize,
    pub squeezing_db: Vec<MeanSem>,
    pub inseparability: Vec<MeanSem>,
    pub mi_bits: Vec<MeanSem>,
    /// Lags where the pooled estimate's smallest symplectic eigenvalue fell
    /// below `1 - 3σ`.
    pub mi_flagged: Vec<bool>,
    pub xcorr: Vec<MeanSem>,
    /// Per-trial cross-correlation maxima.
    pub xcorr_peaks: PeakSet,
    /// Per-trial inseparability minima.
    pub insep_minima: PeakSet,
    /// Refined peak of the pooled MI curve with shot `i` left out.
    pub mi_peak_jackknife: Vec<f64>,
}

impl DelaySweepResult {
    /// Aggregates per-shot sweeps in the given order (callers sort by shot
    /// index so results do not depend on scheduling).
    pub fn aggregate(lags: LagGrid, lagged_mode: Mode, shots: &[ShotSweep], sn: &ShotNoiseLevel) -> Result<Self> {
        if shots.is_empty() {
            return Err(Error::Analysis("no shots to aggregate".into()));
        }
        if shots
            .iter()
            .any(|s| s.inseparability.len() != lags.len || s.covariances.len() != lags.len)
        {
            return Err(Error::Analysis("shot sweeps do not match the delay grid".into()));
        }
        let n = shots.len();
        let axis = lags.axis();
        let column = |pick: &dyn Fn(&ShotSweep) -> f64| -> MeanSem {
            MeanSem::from_samples(&shots.iter().map(pick).collect::<Vec<_>>())
        };
        let mut sums = vec![[0.0; 10]; lags.len];
        for s in shots {
            for (acc, c) in sums.iter_mut().zip(&s.covariances) {
                acc.iter_mut().zip(c).for_each(|(a, v)| *a += v);
            }
        }
        let scaled = |sum: &PackedCovariance, minus: Option<&PackedCovariance>, count: usize| -> TwoModeCovariance {
            let mut p = *sum;
            if let Some(m) = minus {
                p.iter_mut().zip(m).for_each(|(a, v)| *a -= v);
            }
            p.iter_mut().for_each(|a| *a /= count as f64);
            unpack(&p)
        };
        let rel_sn = sn.relative_se();
        let mut mi_full = Vec::with_capacity(lags.len);
        let mut mi_flagged = Vec::with_capacity(lags.len);
        for sum in &sums {
            let cov = scaled(sum, None, n);
            let nu_min = cov.symplectic_eigenvalues().min();
            let sigma = symplectic_sigma(nu_min.max(0.0), sn.effective_bins, n, rel_sn);
            mi_flagged.push(!(nu_min >= 1.0 - 3.0 * sigma));
            mi_full.push(estimated_mi(&cov));
        }
        // Leave-one-out curves, kept only as their per-lag values and peaks.
        let mut loo_values = vec![Vec::with_capacity(n); lags.len];
        let mut mi_peak_jackknife = Vec::new();
        if n >= 2 {
            for s in shots {
                let curve: Vec<f64> = sums
                    .iter()
                    .zip(&s.covariances)
                    .map(|(sum, c)| estimated_mi(&scaled(sum, Some(c), n - 1)))
                    .collect();
                for (col, v) in loo_values.iter_mut().zip(&curve) {
                    col.push(*v);
                }
                mi_peak_jackknife
                    .push(fit_peak(&curve, &axis, Extremum::Max, MI_PEAK_FRACTION).map_or(f64::NAN, |p| p.refined_s));
            }
        }
        let mi_bits = mi_full
            .iter()
            .zip(&loo_values)
            .map(|(&mean, loo)| MeanSem {
                mean,
                sem: jackknife_sem(loo),
                count: n,
            })
            .collect();
        Ok(Self {
            lags,
            lagged_mode,
            n_shots: n,
            squeezing_db: (0..lags.len).map(|j| column(&|s| s.squeezing_db[j])).collect(),
            inseparability: (0..lags.len).map(|j| column(&|s| s.inseparability[j])).collect(),
            mi_bits,
            mi_flagged,
            xcorr: (0..lags.len).map(|j| column(&|s| s.xcorr[j])).collect(),
            xcorr_peaks: PeakSet::from_curves(
                &shots.iter().map(|s| s.xcorr.clone()).collect::<Vec<_>>(),
                &axis,
                Extremum::Max,
            ),
            insep_minima: PeakSet::from_curves(
                &shots.iter().map(|s| s.inseparability.clone()).collect::<Vec<_>>(),
                &axis,
                Extremum::Min,
            ),
            mi_peak_jackknife,
        })
    }

    pub fn delays_s(&self) -> Vec<f64> {
        self.lags.delays_s()
    }

    fn means(curve: &[MeanSem]) -> (Vec<f64>, Vec<f64>) {
        (
            curve.iter().map(|m| m.mean).collect(),
            curve.iter().map(|m| m.sem).collect(),
        )
    }

    /// Minimum of the mean inseparability curve.
    pub fn inseparability_minimum(&self) -> Option<PeakLocation> {
        locate_peak(&Self::means(&self.inseparability).0, &self.lags.axis(), Extremum::Min)
    }

    /// Maximum of the mutual-information curve; `refined_s` is the vertex
    /// of a parabola fitted to its top [`MI_PEAK_FRACTION`].
    pub fn mi_maximum(&self) -> Option<PeakLocation> {
        fit_peak(
            &Self::means(&self.mi_bits).0,
            &self.lags.axis(),
            Extremum::Max,
            MI_PEAK_FRACTION,
        )
    }

    /// Jackknife error of the refined MI peak time.
    pub fn mi_peak_sem_s(&self) -> f64 {
        jackknife_sem(&self.mi_peak_jackknife)
    }

    pub fn mi_edges(&self, level: EdgeLevel) -> Result<EdgeTiming> {
        let (m, s) = Self::means(&self.mi_bits);
        edge_timing(&m, &s, &self.lags.axis(), level)
    }

    pub fn xcorr_edges(&self, level: EdgeLevel) -> Result<EdgeTiming> {
        let (m, s) = Self::means(&self.xcorr);
        edge_timing(&m, &s, &self.lags.axis(), level)
    }

    pub fn mi_flagged_count(&self) -> usize {
        self.mi_flagged.iter().filter(|f| **f).count()
    }
}

/// Shift of the refined MI peak from `reference` to `test`. When `paired`
/// (same source shots in the same order) the error is the jackknife of the
/// difference; otherwise the two jackknife errors add in quadrature.
pub fn mi_peak_shift(reference: &DelaySweepResult, test: &DelaySweepResult, paired: bool) -> Result<PeakShift> {
    let peak = |r: &DelaySweepResult| {
        r.mi_maximum()
            .ok_or_else(|| Error::Analysis("mutual-information curve has no peak".into()))
    };
    let shift_s = peak(test)?.refined_s - peak(reference)?.refined_s;
    let sem_s = if paired {
        if reference.mi_peak_jackknife.len() != test.mi_peak_jackknife.len() {
            return Err(Error::Analysis("paired comparison needs equal shot counts".into()));
        }
        let d: Vec<f64> = reference
            .mi_peak_jackknife
            .iter()
            .zip(&test.mi_peak_jackknife)
            .map(|(a, b)| b - a)
            .collect();
        jackknife_sem(&d)
    } else {
        reference.mi_peak_sem_s().hypot(test.mi_peak_sem_s())
    };
    Ok(PeakShift { shift_s, sem_s, paired })
}

/// Pooled covariance estimate with per-entry standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceEstimate {
    pub covariance: TwoModeCovariance,
    pub sem: [[f64; 4]; 4],
    pub n_shots: usize,
    pub nu_min: f64,
    pub nu_sigma: f64,
    /// Smallest symplectic eigenvalue below `1 - 3σ`.
    pub unphysical: bool,
}

/// Mean over shots of the per-shot covariance at `lag`. The standard error
/// of each entry combines the shot-to-shot scatter with the common
/// shot-noise normalization error.
pub fn estimate_covariance_from_spectra(
    shots: &[ShotSpectra],
    lag: i64,
    lagged: Mode,
    sn: &ShotNoiseLevel,
) -> Result<CovarianceEstimate> {
    if shots.is_empty() {
        return Err(Error::Analysis("no shots".into()));
    }
    let per_shot: Vec<TwoModeCovariance> = shots
        .iter()
        .map(|s| s.covariance_at(lag, lagged, sn))
        .collect::<Result<_>>()?;
    let n = per_shot.len();
    let rel_sn = sn.relative_se();
    let mut mean = [[0.0; 4]; 4];
    let mut sem = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let xs: Vec<f64> = per_shot.iter().map(|c| c.get(i, j)).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            mean[i][j] = m;
            let scatter = if n > 1 {
                sample_std(&xs) / (n as f64).sqrt()
            } else {
                0.0
            };
            sem[i][j] = scatter.hypot(m * rel_sn);
        }
    }
    let covariance = TwoModeCovariance::symmetrized(mean);
    let nu_min = covariance.symplectic_eigenvalues().min();
    let nu_sigma = symplectic_sigma(nu_min.max(0.0), sn.effective_bins, n, rel_sn);
    Ok(CovarianceEstimate {
        covariance,
        sem,
        n_shots: n,
        nu_min,
        nu_sigma,
        unphysical: !(nu_min >= 1.0 - 3.0 * nu_sigma),
    })
}

/// Covariance of the filtered, delayed traces of `shots`.
pub fn estimate_covariance(
    shots: &[ExperimentShot],
    delay_s: f64,
    settings: &SweepSettings,
    sn: &ShotNoiseLevel,
) -> Result<CovarianceEstimate> {
    let first = shots.first().ok_or_else(|| Error::Analysis("no shots".into()))?;
    let grid = LagGrid::from_delays(delay_s, delay_s, first.sample_period_s(), first.sample_period_s())?;
    grid.check_trace_length(first.len())?;
    let spectra: Vec<ShotSpectra> = shots
        .iter()
        .map(|s| ShotSpectra::new(s, settings.band, settings.filter))
        .collect::<Result<_>>()?;
    estimate_covariance_from_spectra(&spectra, grid.min, settings.lagged_mode, sn)
}

/// Full sweep (squeezing, inseparability, mutual information and
/// cross-correlation) over in-memory shots.
pub fn delay_sweep(
    shots: &[ExperimentShot],
    lags: &LagGrid,
    settings: &SweepSettings,
    sn: &ShotNoiseLevel,
) -> Result<DelaySweepResult> {
    let sweeps: Vec<ShotSweep> = shots
        .iter()
        .map(|s| {
            let spec = ShotSpectra::new(s, settings.band, settings.filter)?;
            sweep_shot(&spec, lags, settings.lagged_mode, sn)
        })
        .collect::<Result<_>>()?;
    DelaySweepResult::aggregate(*lags, settings.lagged_mode, &sweeps, sn)
}

/// [`delay_sweep`]; the inseparability and squeezing curves are the
/// relevant fields.
pub fn delay_sweep_inseparability(
    shots: &[ExperimentShot],
    lags: &LagGrid,
    settings: &SweepSettings,
    sn: &ShotNoiseLevel,
) -> Result<DelaySweepResult> {
    delay_sweep(shots, lags, settings, sn)
}

/// [`delay_sweep`]; the mutual-information curve is the relevant field.
pub fn delay_sweep_mutual_information(
    shots: &[ExperimentShot],
    lags: &LagGrid,
    settings: &SweepSettings,
    sn: &ShotNoiseLevel,
) -> Result<DelaySweepResult> {
    delay_sweep(shots, lags, settings, sn)
}
