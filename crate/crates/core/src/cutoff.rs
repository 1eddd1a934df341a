//! Smooth and sharp cutoff functions.
//!
//! `ζ_a` equals one on `[0, a]`, vanishes on `[(1+3a)/4, 1]` and is built
//! from the standard `exp(-1/x)` partition, so it is C∞ and non-increasing.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffKind {
    /// `ζ_a`
    Smooth,
    /// `ζ♯_a = 1 − ζ_a`
    SmoothComplement,
    /// `χ_a`, the indicator of `[0, a]`
    Sharp,
    /// `χ♯_a = 1 − χ_a`
    SharpComplement,
}

/// A cutoff sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFamily {
    pub a: f64,
    pub kind: CutoffKind,
    pub samples: Vec<f64>,
}

fn bump_tail(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// `ψ(x) = f(x) / (f(x) + f(1 − x))`: zero for `x ≤ 0`, one for `x ≥ 1`.
pub fn transition(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = bump_tail(x);
    let b = bump_tail(1.0 - x);
    a / (a + b)
}

fn check_center(a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(Error::config("cutoff center must lie in (0, 1)"))
    }
}

/// Right end of the transition layer of `ζ_a`.
pub fn support_end(a: f64) -> f64 {
    (1.0 + 3.0 * a) / 4.0
}

/// Pointwise value of a cutoff; `a` is assumed to lie in `(0, 1)`.
pub fn cutoff_value(kind: CutoffKind, a: f64, r: f64) -> f64 {
    match kind {
        CutoffKind::Smooth => {
            let s = support_end(a);
            transition((s - r) / (s - a))
        }
        CutoffKind::SmoothComplement => 1.0 - cutoff_value(CutoffKind::Smooth, a, r),
        CutoffKind::Sharp => {
            if r <= a {
                1.0
            } else {
                0.0
            }
        }
        CutoffKind::SharpComplement => 1.0 - cutoff_value(CutoffKind::Sharp, a, r),
    }
}

pub fn cutoff(kind: CutoffKind, a: f64, grid: &RadialGrid) -> Result<CutoffFamily> {
    check_center(a)?;
    Ok(CutoffFamily { a, kind, samples: grid.sample(|r| cutoff_value(kind, a, r)) })
}

/// `ζ_a` on the grid.
pub fn smooth_cutoff(a: f64, grid: &RadialGrid) -> Result<CutoffFamily> {
    cutoff(CutoffKind::Smooth, a, grid)
}
