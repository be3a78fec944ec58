#![allow(dead_code)]

pub mod fock;
pub mod lorentz;

use std::f64::consts::LN_2;

/// `r` for a source whose squeezed quadrature sits at half the vacuum level.
pub const R_3DB: f64 = LN_2 / 2.0;
