//! Peak localization, peak-shift statistics and edge timing on sampled
//! curves with a uniform time axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::MeanSem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Max,
    Min,
}

/// Uniform time axis `t_i = start + i·step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub start_s: f64,
    pub step_s: f64,
    pub len: usize,
}

impl TimeAxis {
    pub fn time(&self, i: usize) -> f64 {
        self.start_s + i as f64 * self.step_s
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.time(i)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakLocation {
    pub index: usize,
    /// Sample time of the discrete extremum.
    pub discrete_s: f64,
    /// Vertex of the parabola through the extremum and its neighbours.
    pub refined_s: f64,
    pub value: f64,
}

/// Offset in samples of the vertex of the parabola through three equally
/// spaced points, in `[-0.5, 0.5]` when the middle point is the extremum.
pub fn parabolic_offset(y_prev: f64, y_mid: f64, y_next: f64) -> f64 {
    let denom = y_prev - 2.0 * y_mid + y_next;
    if denom == 0.0 {
        0.0
    } else {
        (0.5 * (y_prev - y_next) / denom).clamp(-0.5, 0.5)
    }
}

/// `None` for an empty, non-finite or constant curve, and when the extremum
/// sits on either end of the axis (the true peak may lie outside it).
pub fn locate_peak(values: &[f64], axis: &TimeAxis, kind: Extremum) -> Option<PeakLocation> {
    if values.is_empty() || values.len() != axis.len || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let better = |a: f64, b: f64| match kind {
        Extremum::Max => a > b,
        Extremum::Min => a < b,
    };
    let mut idx = 0;
    for (i, &v) in values.iter().enumerate() {
        if better(v, values[idx]) {
            idx = i;
        }
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi || idx == 0 || idx + 1 == values.len() {
        return None;
    }
    let offset = parabolic_offset(values[idx - 1], values[idx], values[idx + 1]);
    Some(PeakLocation {
        index: idx,
        discrete_s: axis.time(idx),
        refined_s: axis.time(idx) + offset * axis.step_s,
        value: values[idx],
    })
}

/// Vertex of a least-squares parabola through the part of the curve within
/// `fraction·(peak - floor)` of the extremum, re-centred once on the first
/// estimate. Broad, noisy tops are located far more stably this way than
/// from three samples. Falls back to [`locate_peak`] when the region is
/// too small to fit.
pub fn fit_peak(values: &[f64], axis: &TimeAxis, kind: Extremum, fraction: f64) -> Option<PeakLocation> {
    let base = locate_peak(values, axis, kind)?;
    let sign = match kind {
        Extremum::Max => 1.0,
        Extremum::Min => -1.0,
    };
    let y: Vec<f64> = values.iter().map(|v| sign * v).collect();
    let floor = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = y[base.index];
    let level = top - fraction * (top - floor);
    let (mut a, mut b) = (base.index, base.index);
    while a > 0 && y[a - 1] >= level {
        a -= 1;
    }
    while b + 1 < y.len() && y[b + 1] >= level {
        b += 1;
    }
    let half = (b - a) / 2;
    if half < 2 {
        return Some(base);
    }
    let vertex = |lo: usize, hi: usize| -> Option<f64> {
        let c = 0.5 * (lo + hi) as f64;
        let (mut s0, mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
        for (i, yi) in y.iter().enumerate().take(hi + 1).skip(lo) {
            let x = i as f64 - c;
            let x2 = x * x;
            s0 += 1.0;
            s1 += x;
            s2 += x2;
            s3 += x2 * x;
            s4 += x2 * x2;
            t0 += yi;
            t1 += x * yi;
            t2 += x2 * yi;
        }
        // Normal equations for y = p0 + p1·x + p2·x², solved by Cramer's rule.
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let m = [[s0, s1, s2], [s1, s2, s3], [s2, s3, s4]];
        let d = det(m);
        if d == 0.0 {
            return None;
        }
        let p1 = det([[s0, t0, s2], [s1, t1, s3], [s2, t2, s4]]) / d;
        let p2 = det([[s0, s1, t0], [s1, s2, t1], [s2, s3, t2]]) / d;
        (p2 < 0.0).then(|| c - p1 / (2.0 * p2))
    };
    let Some(first) = vertex(a, b).filter(|v| *v >= a as f64 && *v <= b as f64) else {
        return Some(base);
    };
    let centre = first.round() as usize;
    let (lo, hi) = (centre.saturating_sub(half), (centre + half).min(y.len() - 1));
    let refined = vertex(lo, hi)
        .filter(|v| *v >= lo as f64 && *v <= hi as f64)
        .unwrap_or(first);
    Some(PeakLocation {
        refined_s: axis.start_s + refined * axis.step_s,
        ..base
    })
}

/// Per-trial peak positions of one condition, in trial order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    /// `(discrete, refined)` peak time per trial; `None` where the curve had
    /// no usable extremum.
    pub trials: Vec<Option<(f64, f64)>>,
}

impl PeakSet {
    pub fn from_locations<I: IntoIterator<Item = Option<PeakLocation>>>(locs: I) -> Self {
        Self {
            trials: locs
                .into_iter()
                .map(|l| l.map(|p| (p.discrete_s, p.refined_s)))
                .collect(),
        }
    }

    pub fn from_curves(curves: &[Vec<f64>], axis: &TimeAxis, kind: Extremum) -> Self {
        Self::from_locations(curves.iter().map(|c| locate_peak(c, axis, kind)))
    }

    pub fn excluded(&self) -> usize {
        self.trials.iter().filter(|t| t.is_none()).count()
    }

    pub fn discrete_s(&self) -> Vec<f64> {
        self.trials.iter().flatten().map(|t| t.0).collect()
    }

    pub fn refined_s(&self) -> Vec<f64> {
        self.trials.iter().flatten().map(|t| t.1).collect()
    }

    pub fn discrete(&self) -> MeanSem {
        MeanSem::from_samples(&self.discrete_s())
    }

    pub fn refined(&self) -> MeanSem {
        MeanSem::from_samples(&self.refined_s())
    }
}

/// Shift of the test peaks relative to the reference peaks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakAdvance {
    /// Test minus reference mean of the discrete per-trial peaks (the
    /// histogram statistic, one-sample bins).
    pub advance_s: f64,
    pub sem_s: f64,
    /// Same with parabolic refinement.
    pub refined_advance_s: f64,
    pub refined_sem_s: f64,
    /// Whether trial `i` of both sets came from the same source shot, in
    /// which case means and sems come from per-trial differences.
    pub paired: bool,
    pub n_reference: usize,
    pub n_test: usize,
    pub excluded_reference: usize,
    pub excluded_test: usize,
}

/// `mean(test) - mean(ref)`. Unpaired: `sem = √(sem_ref² + sem_test²)`.
/// Paired (equal trial counts, same source shots): statistics of the
/// per-trial differences over trials usable in both sets. Needs at least
/// two usable trials.
pub fn peak_advance_from_sets(reference: &PeakSet, test: &PeakSet, paired: bool) -> Result<PeakAdvance> {
    let (discrete, refined) = if paired {
        if reference.trials.len() != test.trials.len() {
            return Err(Error::Analysis(format!(
                "paired comparison needs equal trial counts ({} vs {})",
                reference.trials.len(),
                test.trials.len()
            )));
        }
        let both: Vec<((f64, f64), (f64, f64))> = reference
            .trials
            .iter()
            .zip(&test.trials)
            .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
            .collect();
        let d: Vec<f64> = both.iter().map(|(a, b)| b.0 - a.0).collect();
        let r: Vec<f64> = both.iter().map(|(a, b)| b.1 - a.1).collect();
        (MeanSem::from_samples(&d), MeanSem::from_samples(&r))
    } else {
        let diff = |a: MeanSem, b: MeanSem| MeanSem {
            mean: b.mean - a.mean,
            sem: a.sem.hypot(b.sem),
            count: a.count.min(b.count),
        };
        (
            diff(reference.discrete(), test.discrete()),
            diff(reference.refined(), test.refined()),
        )
    };
    let (n_reference, n_test) = (
        reference.trials.len() - reference.excluded(),
        test.trials.len() - test.excluded(),
    );
    if n_reference < 2 || n_test < 2 || discrete.count < 2 {
        return Err(Error::Analysis(format!(
            "need >= 2 usable peaks per condition (reference {n_reference}, test {n_test}; {} and {} flat curves excluded)",
            reference.excluded(),
            test.excluded()
        )));
    }
    Ok(PeakAdvance {
        advance_s: discrete.mean,
        sem_s: discrete.sem,
        refined_advance_s: refined.mean,
        refined_sem_s: refined.sem,
        paired,
        n_reference,
        n_test,
        excluded_reference: reference.excluded(),
        excluded_test: test.excluded(),
    })
}

/// Unpaired peak shift between two sets of curves.
pub fn peak_advance(reference: &[Vec<f64>], test: &[Vec<f64>], axis: &TimeAxis, kind: Extremum) -> Result<PeakAdvance> {
    peak_advance_from_sets(
        &PeakSet::from_curves(reference, axis, kind),
        &PeakSet::from_curves(test, axis, kind),
        false,
    )
}

/// Crossing level for [`edge_timing`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeLevel {
    /// Fraction of the curve's own peak value.
    FractionOfPeak(f64),
    /// Fixed curve value.
    Absolute(f64),
}

impl Default for EdgeLevel {
    fn default() -> Self {
        EdgeLevel::FractionOfPeak(0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time_s: f64,
    /// Curve sem at the crossing divided by the local slope.
    pub uncertainty_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTiming {
    pub level: f64,
    pub peak_s: f64,
    pub peak_value: f64,
    pub leading: Crossing,
    pub trailing: Crossing,
}

impl EdgeTiming {
    pub fn width_s(&self) -> f64 {
        self.trailing.time_s - self.leading.time_s
    }

    pub fn width_uncertainty_s(&self) -> f64 {
        self.leading.uncertainty_s.hypot(self.trailing.uncertainty_s)
    }
}

/// Leading and trailing crossings of `level`, found by walking outward from
/// the maximum and interpolating linearly between the bracketing samples.
pub fn edge_timing(values: &[f64], sems: &[f64], axis: &TimeAxis, level: EdgeLevel) -> Result<EdgeTiming> {
    if values.len() != axis.len || sems.len() != values.len() {
        return Err(Error::Analysis("curve, sem and axis lengths differ".into()));
    }
    let peak = locate_peak(values, axis, Extremum::Max).ok_or_else(|| Error::Analysis("curve has no peak".into()))?;
    let target = match level {
        EdgeLevel::FractionOfPeak(f) => f * peak.value,
        EdgeLevel::Absolute(v) => v,
    };
    if !(target < peak.value) {
        return Err(Error::NoCrossing(target));
    }
    let crossing = |i: usize, j: usize| -> Crossing {
        // `values[i] >= target > values[j]` with `j = i ± 1`.
        let (yi, yj) = (values[i], values[j]);
        let frac = (yi - target) / (yi - yj);
        let (ti, tj) = (axis.time(i), axis.time(j));
        let slope = (yj - yi) / (tj - ti);
        let sem = sems[i] + frac * (sems[j] - sems[i]);
        Crossing {
            time_s: ti + frac * (tj - ti),
            uncertainty_s: sem / slope.abs(),
        }
    };
    let mut leading = None;
    for i in (1..=peak.index).rev() {
        if values[i - 1] < target {
            leading = Some(crossing(i, i - 1));
            break;
        }
    }
    let mut trailing = None;
    for i in peak.index..values.len().saturating_sub(1) {
        if values[i + 1] < target {
            trailing = Some(crossing(i, i + 1));
            break;
        }
    }
    match (leading, trailing) {
        (Some(leading), Some(trailing)) => Ok(EdgeTiming {
            level: target,
            peak_s: peak.refined_s,
            peak_value: peak.value,
            leading,
            trailing,
        }),
        _ => Err(Error::NoCrossing(target)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex() {
        // y = -(x - 0.25)²
        let y = |x: f64| -(x - 0.25) * (x - 0.25);
        assert!((parabolic_offset(y(-1.0), y(0.0), y(1.0)) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fitted_peak_of_exact_parabola() {
        let axis = TimeAxis {
            start_s: -10.0,
            step_s: 0.5,
            len: 41,
        };
        let y: Vec<f64> = axis
            .times()
            .iter()
            .map(|t| 4.0 - 0.01 * (t - 1.3) * (t - 1.3))
            .collect();
        let p = fit_peak(&y, &axis, Extremum::Max, 0.1).unwrap();
        assert!((p.refined_s - 1.3).abs() < 1e-9);
    }

    #[test]
    fn flat_curve_has_no_peak() {
        let axis = TimeAxis {
            start_s: 0.0,
            step_s: 1.0,
            len: 4,
        };
        assert!(locate_peak(&[1.0; 4], &axis, Extremum::Max).is_none());
    }

    #[test]
    fn extremum_on_the_boundary_is_not_a_peak() {
        let axis = TimeAxis {
            start_s: 0.0,
            step_s: 1.0,
            len: 4,
        };
        assert!(locate_peak(&[3.0, 2.0, 1.0, 0.0], &axis, Extremum::Max).is_none());
        assert!(locate_peak(&[3.0, 2.0, 1.0, 0.0], &axis, Extremum::Min).is_none());
        assert_eq!(
            locate_peak(&[0.0, 2.0, 1.0, 0.0], &axis, Extremum::Max).unwrap().index,
            1
        );
    }
}
