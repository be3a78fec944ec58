//! Thin wrappers over `rustfft` with a per-thread plan cache.
//!
//! Forward transforms use `X_k = Σ x_n e^{-2πikn/N}`; inverse transforms are
//! normalized by `1/N` so that `inverse(forward(x)) == x` up to rounding.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn forward(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

pub fn inverse(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let n = buf.len();
    if n > 1 {
        let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
        plan.process(buf);
    }
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
}

/// Spectra of two real sequences of equal length from a single complex FFT.
pub fn real_pair_spectra(x: &[f64], y: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    assert_eq!(x.len(), y.len(), "real_pair_spectra: length mismatch");
    let n = x.len();
    let mut z: Vec<Complex64> = x.iter().zip(y).map(|(&a, &b)| Complex64::new(a, b)).collect();
    forward(&mut z);
    let mut xs = vec![Complex64::new(0.0, 0.0); n];
    let mut ys = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let zk = z[k];
        let zm = z[(n - k) % n].conj();
        xs[k] = 0.5 * (zk + zm);
        ys[k] = Complex64::new(0.0, -0.5) * (zk - zm);
    }
    (xs, ys)
}

/// Inverse of [`real_pair_spectra`]: both spectra must be Hermitian.
pub fn real_pair_from_spectra(xs: &[Complex64], ys: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(xs.len(), ys.len(), "real_pair_from_spectra: length mismatch");
    let i = Complex64::new(0.0, 1.0);
    let mut z: Vec<Complex64> = xs.iter().zip(ys).map(|(&a, &b)| a + i * b).collect();
    inverse(&mut z);
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

/// Spectrum of one real sequence.
pub fn real_spectrum(x: &[f64]) -> Vec<Complex64> {
    let mut z: Vec<Complex64> = x.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    forward(&mut z);
    z
}

/// Fills bins `N/2+1..N` with the conjugates of `1..N/2` so the inverse
/// transform is real.
pub fn enforce_hermitian(spec: &mut [Complex64]) {
    let n = spec.len();
    if n == 0 {
        return;
    }
    spec[0].im = 0.0;
    if n.is_multiple_of(2) {
        spec[n / 2].im = 0.0;
    }
    for k in 1..n.div_ceil(2) {
        spec[n - k] = spec[k].conj();
    }
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Frequency in Hz of non-negative bin `k` for `n` samples at `dt` seconds.
pub fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    k as f64 / (n as f64 * dt)
}
