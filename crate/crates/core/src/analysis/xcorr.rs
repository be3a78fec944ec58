//! Linear cross-correlation `(f⋆g)[n] = Σ_m f[m]·g[n+m]`.
//!
//! A peak at positive lag `n` means `g` lags `f` by `n` samples.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

/// Correlation values for lags `min_lag..=max_lag`.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlation {
    pub min_lag: i64,
    pub values: Vec<f64>,
}

impl Correlation {
    pub fn max_lag(&self) -> i64 {
        self.min_lag + self.values.len() as i64 - 1
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.values.len()).map(move |i| self.min_lag + i as i64)
    }

    pub fn at(&self, lag: i64) -> Option<f64> {
        usize::try_from(lag - self.min_lag)
            .ok()
            .and_then(|i| self.values.get(i).copied())
    }

    /// Lag of the largest value; ties go to the smallest lag.
    pub fn argmax(&self) -> Option<i64> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| self.min_lag + i as i64)
    }
}

/// Every lag `-(N-1)..=N-1`, via a zero-padded FFT of length `>= 2N-1`.
pub fn cross_correlation(f: &[f64], g: &[f64]) -> Result<Correlation> {
    let n = check_lengths(f, g)?;
    if n == 0 {
        return Ok(Correlation {
            min_lag: 0,
            values: Vec::new(),
        });
    }
    cross_correlation_window(f, g, n as i64 - 1)
}

/// Lags `-max_lag..=max_lag` only; the FFT needs `N + max_lag` points.
pub fn cross_correlation_window(f: &[f64], g: &[f64], max_lag: i64) -> Result<Correlation> {
    let n = check_lengths(f, g)?;
    if max_lag < 0 {
        return Err(Error::invalid("max_lag", "must be >= 0"));
    }
    if n == 0 {
        return Ok(Correlation {
            min_lag: 0,
            values: Vec::new(),
        });
    }
    let max_lag = max_lag.min(n as i64 - 1);
    let len = fft::next_fast_len(n + max_lag as usize);
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    for i in 0..n {
        a[i].re = f[i];
        b[i].re = g[i];
    }
    fft::forward(&mut a);
    fft::forward(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x = x.conj() * y;
    }
    fft::inverse(&mut a);
    let mut values: Vec<f64> = (-max_lag..=max_lag)
        .map(|lag| a[lag.rem_euclid(len as i64) as usize].re)
        .collect();
    // Lag 0 as a plain dot product, so a self-correlation normalizes to 1
    // without FFT rounding.
    values[max_lag as usize] = f.iter().zip(g).map(|(x, y)| x * y).sum();
    Ok(Correlation {
        min_lag: -max_lag,
        values,
    })
}

/// [`cross_correlation`] divided by `√(Σf²·Σg²)`.
pub fn normalized_cross_correlation(f: &[f64], g: &[f64]) -> Result<Correlation> {
    let mut c = cross_correlation(f, g)?;
    normalize(&mut c, f, g)?;
    Ok(c)
}

pub fn normalized_cross_correlation_window(f: &[f64], g: &[f64], max_lag: i64) -> Result<Correlation> {
    let mut c = cross_correlation_window(f, g, max_lag)?;
    normalize(&mut c, f, g)?;
    Ok(c)
}

fn normalize(c: &mut Correlation, f: &[f64], g: &[f64]) -> Result<()> {
    let ef: f64 = f.iter().map(|x| x * x).sum();
    let eg: f64 = g.iter().map(|x| x * x).sum();
    let scale = (ef * eg).sqrt();
    if scale == 0.0 {
        return Err(Error::Analysis(
            "cannot normalize the correlation of an all-zero trace".into(),
        ));
    }
    c.values.iter_mut().for_each(|v| *v /= scale);
    Ok(())
}

fn check_lengths(f: &[f64], g: &[f64]) -> Result<usize> {
    if f.len() != g.len() {
        return Err(Error::TraceMismatch(format!("lengths {} and {}", f.len(), g.len())));
    }
    Ok(f.len())
}
