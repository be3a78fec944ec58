//! Small sample-statistics helpers.

use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSem {
    pub mean: f64,
    pub sem: f64,
    pub count: usize,
}

impl MeanSem {
    /// `sem` is `s/√n` with the `n-1` sample deviation; zero for `n < 2`.
    /// An empty slice gives a NaN mean.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = mean(xs);
        let sem = if n < 2 { 0.0 } else { sample_std(xs) / (n as f64).sqrt() };
        Self { mean, sem, count: n }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (`n-1`) standard deviation.
pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sem() {
        let m = MeanSem::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.sem - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(MeanSem::from_samples(&[7.0]).sem, 0.0);
    }
}
