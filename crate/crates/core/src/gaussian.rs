//! Two-mode Gaussian-state calculus in shot-noise units.
//!
//! Quadrature ordering is fixed to `(X_p, Y_p, X_c, Y_c)` everywhere and the
//! vacuum variance is 1, so the inseparability threshold is literally 2.
//! Entropies are reported in bits.

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symplectic eigenvalues this far below 1 are treated as rounding noise.
pub const PHYSICAL_TOLERANCE: f64 = 1e-9;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// One of the two twin beams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Probe,
    Conjugate,
}

impl Mode {
    /// Row of this mode's `X` quadrature in the covariance matrix.
    pub fn offset(self) -> usize {
        match self {
            Mode::Probe => 0,
            Mode::Conjugate => 2,
        }
    }

    pub fn other(self) -> Mode {
        match self {
            Mode::Probe => Mode::Conjugate,
            Mode::Conjugate => Mode::Probe,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Probe => "probe",
            Mode::Conjugate => "conjugate",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probe" => Ok(Mode::Probe),
            "conjugate" => Ok(Mode::Conjugate),
            other => Err(Error::invalid(
                "mode",
                format!("expected probe|conjugate, got {other:?}"),
            )),
        }
    }
}

/// Symmetric 4×4 quadrature covariance matrix of a two-mode state.
///
/// Symmetry is enforced at construction. Physicality (all symplectic
/// eigenvalues ≥ 1) is checked by [`TwoModeCovariance::new`] but not by
/// [`TwoModeCovariance::symmetrized`], which exists for statistical estimates
/// and partial transposes that may legitimately violate it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeCovariance {
    entries: [[f64; 4]; 4],
}

impl TwoModeCovariance {
    /// Validated constructor: rejects asymmetric, non-positive-definite or
    /// unphysical matrices.
    pub fn new(entries: [[f64; 4]; 4]) -> Result<Self> {
        check_symmetric(&entries)?;
        let cov = Self::symmetrized(entries);
        cov.check_physical()?;
        Ok(cov)
    }

    /// Averages `m` with its transpose. No physicality check.
    pub fn symmetrized(m: [[f64; 4]; 4]) -> Self {
        let mut entries = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                entries[i][j] = 0.5 * (m[i][j] + m[j][i]);
            }
        }
        Self { entries }
    }

    pub fn vacuum() -> Self {
        let mut entries = [[0.0; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    /// 2×2 block coupling mode `a` (rows) to mode `b` (columns).
    pub fn block(&self, a: Mode, b: Mode) -> [[f64; 2]; 2] {
        let (i, j) = (a.offset(), b.offset());
        [
            [self.entries[i][j], self.entries[i][j + 1]],
            [self.entries[i + 1][j], self.entries[i + 1][j + 1]],
        ]
    }

    pub fn determinant(&self) -> f64 {
        det4(&self.entries)
    }

    pub fn symplectic_eigenvalues(&self) -> SymplecticSpectrum {
        spectrum_of(&self.entries)
    }

    pub fn is_positive_definite(&self) -> bool {
        cholesky_ok(&self.entries)
    }

    /// True when positive definite and every symplectic eigenvalue is at
    /// least `1 - tolerance`.
    pub fn is_physical(&self, tolerance: f64) -> bool {
        self.is_positive_definite() && self.symplectic_eigenvalues().min() >= 1.0 - tolerance
    }

    pub fn check_physical(&self) -> Result<()> {
        if !self.is_positive_definite() {
            return Err(Error::Unphysical("matrix is not positive definite".into()));
        }
        let nu = self.symplectic_eigenvalues().min();
        if nu < 1.0 - PHYSICAL_TOLERANCE {
            return Err(Error::Unphysical(format!("smallest symplectic eigenvalue {nu} < 1")));
        }
        Ok(())
    }
}

fn check_symmetric(m: &[[f64; 4]; 4]) -> Result<()> {
    let scale = m.iter().flatten().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if !m[i][j].is_finite() || !m[j][i].is_finite() {
                return Err(Error::invalid("covariance", "non-finite entry"));
            }
            worst = worst.max((m[i][j] - m[j][i]).abs());
        }
    }
    if m.iter().enumerate().any(|(i, row)| !row[i].is_finite()) {
        return Err(Error::invalid("covariance", "non-finite entry"));
    }
    if worst > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

/// Squeezing parameter and amplifier intensity gain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeGainParams {
    pub r: f64,
    pub gain: f64,
}

impl SqueezeGainParams {
    pub fn new(r: f64, gain: f64) -> Result<Self> {
        check_r(r)?;
        check_gain(gain)?;
        Ok(Self { r, gain })
    }

    /// Squeezed joint-quadrature noise power `e^{-2r}` relative to shot noise.
    pub fn squeezed_noise_power(&self) -> f64 {
        (-2.0 * self.r).exp()
    }

    /// Amplifier coefficients `(|μ|, |ν|)` with `|μ|² = G`, `|ν|² = G - 1`.
    pub fn amplifier_coefficients(&self) -> (f64, f64) {
        (self.gain.sqrt(), (self.gain - 1.0).sqrt())
    }
}

/// Squeezing parameter for a squeezed noise power of `db` decibels (negative
/// values squeeze).
pub fn r_from_db(db: f64) -> Result<f64> {
    if !db.is_finite() || db > 0.0 {
        return Err(Error::invalid(
            "r_db",
            format!("expected a finite value <= 0, got {db}"),
        ));
    }
    Ok(-0.5 * (10f64.powf(db / 10.0)).ln())
}

pub fn db_from_r(r: f64) -> f64 {
    10.0 * (-2.0 * r).exp().log10()
}

fn check_r(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid(
            "r",
            format!("squeezing parameter must be finite and >= 0, got {r}"),
        ));
    }
    Ok(())
}

fn check_gain(gain: f64) -> Result<()> {
    if !(gain.is_finite() && gain >= 1.0) {
        return Err(Error::invalid(
            "gain",
            format!("phase-insensitive gain must be finite and >= 1, got {gain}"),
        ));
    }
    Ok(())
}

/// The two symplectic eigenvalues of a two-mode covariance, sorted descending.
///
/// Values below 1 are representable on purpose: a partially transposed
/// entangled state has one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymplecticSpectrum {
    nu: [f64; 2],
}

impl SymplecticSpectrum {
    pub fn new(a: f64, b: f64) -> Self {
        let nu = if a >= b { [a, b] } else { [b, a] };
        Self { nu }
    }

    pub fn values(&self) -> [f64; 2] {
        self.nu
    }

    pub fn max(&self) -> f64 {
        self.nu[0]
    }

    pub fn min(&self) -> f64 {
        self.nu[1]
    }
}

/// Pure two-mode squeezed vacuum (EPR) covariance.
pub fn epr_covariance(r: f64) -> Result<TwoModeCovariance> {
    check_r(r)?;
    let c = (2.0 * r).cosh();
    let s = (2.0 * r).sinh();
    Ok(TwoModeCovariance {
        entries: [[c, 0.0, s, 0.0], [0.0, c, 0.0, -s], [s, 0.0, c, 0.0], [0.0, -s, 0.0, c]],
    })
}

/// Sends `mode` through an ideal phase-insensitive amplifier of gain `gain`
/// whose idler port is in vacuum: `a -> √G a + √(G-1) b†`.
///
/// In quadratures this is `X -> √G X + √(G-1) X_b`, `Y -> √G Y - √(G-1) Y_b`,
/// so the amplified block becomes `G·A + (G-1)·1` and every covariance with
/// the other mode is scaled by `√G`.
pub fn apply_phase_insensitive_gain(cov: &TwoModeCovariance, gain: f64, mode: Mode) -> Result<TwoModeCovariance> {
    check_gain(gain)?;
    cov.check_physical()?;
    if gain == 1.0 {
        return Ok(*cov);
    }
    let root = gain.sqrt();
    let k = mode.offset();
    let mut m = cov.entries;
    for i in 0..4 {
        for j in 0..4 {
            let in_i = i == k || i == k + 1;
            let in_j = j == k || j == k + 1;
            m[i][j] = match (in_i, in_j) {
                (true, true) => gain * m[i][j] + if i == j { gain - 1.0 } else { 0.0 },
                (true, false) | (false, true) => root * m[i][j],
                (false, false) => m[i][j],
            };
        }
    }
    Ok(TwoModeCovariance { entries: m })
}

/// Symplectic eigenvalues of an arbitrary symmetric 4×4 matrix, i.e. the
/// moduli of the eigenvalues of `iΩγ` with `Ω = ⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_eigenvalues(m: &[[f64; 4]; 4]) -> Result<SymplecticSpectrum> {
    check_symmetric(m)?;
    Ok(spectrum_of(m))
}

fn spectrum_of(m: &[[f64; 4]; 4]) -> SymplecticSpectrum {
    // For positive-definite γ the ν² are the (doubly degenerate) eigenvalues
    // of the symmetric γ^½ Ωᵀ γ Ω γ^½, which a symmetric solver gets to
    // machine precision even when ν₊ = ν₋.
    let g = Matrix4::from_fn(|i, j| m[i][j]);
    let eig = SymmetricEigen::new(g);
    if eig.eigenvalues.iter().all(|&l| l > 0.0) {
        let root =
            eig.eigenvectors * Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
        let omega = Matrix4::new(
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -1.0, 0.0,
        );
        let k = root * omega.transpose() * g * omega * root;
        let k = 0.5 * (k + k.transpose());
        let mut nu2: Vec<f64> = SymmetricEigen::new(k).eigenvalues.iter().copied().collect();
        nu2.sort_by(f64::total_cmp);
        let lo = (0.5 * (nu2[0] + nu2[1])).max(0.0).sqrt();
        let hi = (0.5 * (nu2[2] + nu2[3])).max(0.0).sqrt();
        return SymplecticSpectrum::new(hi, lo);
    }
    // Indefinite estimates: ν±² = (Δ ± √(Δ² - 4 det γ)) / 2 with the seralian
    // Δ = det A + det B + 2 det C.
    let det2 = |i: usize, j: usize| m[i][j] * m[i + 1][j + 1] - m[i][j + 1] * m[i + 1][j];
    let delta = det2(0, 0) + det2(2, 2) + 2.0 * det2(0, 2);
    let det = det4(m);
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let hi = (0.5 * (delta + disc)).max(0.0).sqrt();
    let lo = (0.5 * (delta - disc)).max(0.0).sqrt();
    SymplecticSpectrum::new(hi, lo)
}

/// `g(ν) = ((ν+1)/2) log₂((ν+1)/2) - ((ν-1)/2) log₂((ν-1)/2)`, the entropy in
/// bits of a single-mode thermal state with symplectic eigenvalue `ν`.
/// `g(1) = 0`.
pub fn entropy_bits(nu: f64) -> f64 {
    let plus = 0.5 * (nu + 1.0);
    let minus = 0.5 * (nu - 1.0);
    if minus <= 0.0 {
        return 0.0;
    }
    plus * plus.log2() - minus * minus.log2()
}

fn clamp_nu(nu: f64, tolerance: f64) -> Result<f64> {
    if nu.is_nan() || nu < 1.0 - tolerance {
        return Err(Error::Unphysical(format!(
            "symplectic eigenvalue {nu} is below 1 - {tolerance:e}"
        )));
    }
    Ok(nu.max(1.0))
}

/// Von Neumann entropy in bits of a Gaussian state with the given spectrum.
pub fn von_neumann_entropy(spectrum: &SymplecticSpectrum) -> Result<f64> {
    spectrum
        .values()
        .iter()
        .map(|&nu| clamp_nu(nu, PHYSICAL_TOLERANCE).map(entropy_bits))
        .sum()
}

/// `S(ρ_p) + S(ρ_c) - S(ρ)` in bits.
pub fn mutual_information(cov: &TwoModeCovariance) -> Result<f64> {
    mutual_information_within(cov, PHYSICAL_TOLERANCE)
}

/// Mutual information with a caller-chosen tolerance for symplectic
/// eigenvalues below 1. Values in `[1 - tolerance, 1)` are clamped to 1;
/// anything lower is an error. Used for noisy covariance estimates.
pub fn mutual_information_within(cov: &TwoModeCovariance, tolerance: f64) -> Result<f64> {
    let marginal = |mode: Mode| -> Result<f64> {
        let b = cov.block(mode, mode);
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let nu = clamp_nu(det.max(0.0).sqrt(), tolerance)?;
        Ok(entropy_bits(nu))
    };
    let joint: f64 = cov
        .symplectic_eigenvalues()
        .values()
        .iter()
        .map(|&nu| clamp_nu(nu, tolerance).map(entropy_bits))
        .sum::<Result<f64>>()?;
    Ok(marginal(Mode::Probe)? + marginal(Mode::Conjugate)? - joint)
}

/// Variances of the joint quadratures `X₋ = (X_p - X_c)/√2` and
/// `Y₊ = (Y_p + Y_c)/√2`.
pub fn joint_variances(cov: &TwoModeCovariance) -> (f64, f64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x_minus = [h, 0.0, -h, 0.0];
    let y_plus = [0.0, h, 0.0, h];
    (
        quadratic_form(&cov.entries, &x_minus),
        quadratic_form(&cov.entries, &y_plus),
    )
}

fn quadratic_form(m: &[[f64; 4]; 4], v: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += v[i] * m[i][j] * v[j];
        }
    }
    acc
}

/// `⟨ΔX₋²⟩ + ⟨ΔY₊²⟩`; below 2 certifies entanglement.
pub fn inseparability(cov: &TwoModeCovariance) -> f64 {
    let (x, y) = joint_variances(cov);
    x + y
}

/// `(1+G) cosh 2r - 2√G sinh 2r + (G-1)` for an EPR source with one beam
/// amplified.
pub fn inseparability_closed_form(r: f64, gain: f64) -> Result<f64> {
    check_r(r)?;
    check_gain(gain)?;
    Ok(closed_form(r, gain))
}

fn closed_form(r: f64, gain: f64) -> f64 {
    (1.0 + gain) * (2.0 * r).cosh() - 2.0 * gain.sqrt() * (2.0 * r).sinh() + (gain - 1.0)
}

/// Smallest gain at which the amplified EPR state stops certifying
/// entanglement (closed-form inseparability reaches 2), by bisection.
pub fn entanglement_breaking_gain(r: f64) -> Result<f64> {
    check_r(r)?;
    if r == 0.0 {
        return Ok(1.0);
    }
    let f = |g: f64| closed_form(r, g) - 2.0;
    let mut lo = 1.0;
    let mut hi = 2.0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Analysis(format!("no breaking gain found for r = {r}")));
        }
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Momentum reversal on the conjugate: flips the sign of the `Y_c` row and
/// column. The result is unphysical exactly when the input is entangled.
pub fn partial_transpose(cov: &TwoModeCovariance) -> TwoModeCovariance {
    let mut m = cov.entries;
    for i in 0..4 {
        if i != 3 {
            m[i][3] = -m[i][3];
            m[3][i] = -m[3][i];
        }
    }
    TwoModeCovariance { entries: m }
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in (col + 1)..4 {
            let factor = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    det
}

fn cholesky_ok(m: &[[f64; 4]; 4]) -> bool {
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let sum: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - sum;
                if !(d > 0.0) {
                    return false;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - sum) / l[j][j];
            }
        }
    }
    true
}
