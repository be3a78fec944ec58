//! Closed-form response of a single Lorentzian gain line.
//!
//! The minimum-phase transfer is `t(x) = (x - iγ')/(x - iγ)` with `x = f - f₀`
//! and `γ' = γ√(1+p)`; its modulus squared is the Lorentzian gain.

use std::f64::consts::PI;

use twinbeam::dispersion::LorentzianLine;

fn widths(line: &LorentzianLine) -> (f64, f64) {
    (line.width_hz, line.width_hz * (1.0 + line.peak_gain).sqrt())
}

pub fn phase(line: &LorentzianLine, f: f64) -> f64 {
    let x = f - line.center_hz;
    let (g, w) = widths(line);
    (-w).atan2(x) - (-g).atan2(x)
}

pub fn group_delay(line: &LorentzianLine, f: f64) -> f64 {
    let x = f - line.center_hz;
    let (g, w) = widths(line);
    -(w / (x * x + w * w) - g / (x * x + g * g)) / (2.0 * PI)
}

/// Detuning where the group delay changes sign, `x² = γγ'`.
pub fn sign_change(line: &LorentzianLine) -> f64 {
    let (g, w) = widths(line);
    (g * w).sqrt()
}
