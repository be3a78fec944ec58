//! Two-mode squeezed vacuum through fast- and slow-light gain media.
//!
//! The crate covers Gaussian-state calculus ([`gaussian`]), the dispersive
//! gain medium ([`dispersion`]), homodyne trace synthesis ([`sim`]), the
//! delay-resolved correlation analysis ([`analysis`]) and persistence
//! ([`io`]). The `twinbeam` binary wraps them in a command-line pipeline.
//!
//! Quadrature variances are in shot-noise units (vacuum = 1) and two-mode
//! quantities use the ordering `(X_p, Y_p, X_c, Y_c)` throughout.

pub mod analysis;
pub mod dispersion;
pub mod error;
pub mod fft;
pub mod gaussian;
pub mod io;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
