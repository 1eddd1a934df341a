//! Manufactured solution `U* = t·r(1−r)²`, `η* = r + t²/2·r(1−r)²` for the
//! example density profile, with its exact body force.
//!
//! The force is the strong form of the Galerkin weak equation,
//! `G = sU_t + (P/η_r)_r − mP/η − 2μ(sU_r/η_r²)_r + 2μm sU/η²` with
//! `s = r^mρ0` and `P = A s^γ (η^mη_r)^{1−γ}`. The two fluxes are
//! differentiated exactly with forward-mode dual numbers.

use core::ops::{Add, Div, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::galerkin::BodyForce;
use crate::grid::RadialGrid;
use crate::initial::PhysicalParams;
use crate::lagrangian::LagrangianState;

/// Value and first derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn var(x: f64) -> Self {
        Self { v: x, d: 1.0 }
    }

    pub fn cst(x: f64) -> Self {
        Self { v: x, d: 0.0 }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::cst(1.0);
        }
        Self { v: self.v.powi(n), d: n as f64 * self.v.powi(n - 1) * self.d }
    }

    pub fn powf(self, p: f64) -> Self {
        Self { v: self.v.powf(p), d: p * self.v.powf(p - 1.0) * self.d }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Self { v: self.v / o.v, d: (self.d * o.v - self.v * o.d) / (o.v * o.v) }
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d: -self.d }
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self * o.v, d: self * o.d }
    }
}

/// The manufactured pair on the example profile `ρ0 = (1 − r^{2k})^{1/β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Manufactured {
    pub params: PhysicalParams,
    pub k: u32,
}

impl Manufactured {
    pub fn new(params: PhysicalParams, k: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::config("profile index k must be at least 1"));
        }
        Ok(Self { params, k })
    }

    pub fn u(t: f64, r: f64) -> f64 {
        t * r * (1.0 - r) * (1.0 - r)
    }

    pub fn u_r(t: f64, r: f64) -> f64 {
        t * (1.0 - r) * (1.0 - 3.0 * r)
    }

    pub fn eta(t: f64, r: f64) -> f64 {
        r + 0.5 * t * t * r * (1.0 - r) * (1.0 - r)
    }

    pub fn eta_r(t: f64, r: f64) -> f64 {
        1.0 + 0.5 * t * t * (1.0 - r) * (1.0 - 3.0 * r)
    }

    /// Exact state on the grid at time `t`.
    pub fn state(&self, t: f64, grid: &RadialGrid) -> LagrangianState {
        LagrangianState {
            t,
            u: grid.sample(|r| Self::u(t, r)),
            u_r: grid.sample(|r| Self::u_r(t, r)),
            eta: grid.sample(|r| Self::eta(t, r)),
            eta_r: grid.sample(|r| Self::eta_r(t, r)),
            params: self.params,
            modal_u: None,
        }
    }

    /// `G(t, r)`, the force in weak density form.
    pub fn weak_force(&self, t: f64, r: f64) -> f64 {
        let p = &self.params;
        let m = p.m() as i32;
        let mf = m as f64;
        let x = Dual::var(r);
        let one = Dual::cst(1.0);
        let e = 2 * self.k as i32;
        let s = x.powi(m) * (one - x.powi(e)).powf(1.0 / p.beta);
        let w = one - x;
        let u = t * (x * w * w);
        let u_r = t * (w * (one - 3.0 * x));
        let eta = x + (0.5 * t * t) * (x * w * w);
        let eta_r = one + (0.5 * t * t) * (w * (one - 3.0 * x));
        let jac = eta.powi(m) * eta_r;
        let pressure = p.a * (s.powf(p.gamma) * jac.powf(1.0 - p.gamma));
        let pressure_flux = pressure / eta_r;
        let viscous_flux = s * u_r / (eta_r * eta_r);
        let u_t = r * (1.0 - r) * (1.0 - r);
        s.v * u_t + pressure_flux.d - mf * pressure.v / eta.v - 2.0 * p.mu * viscous_flux.d
            + 2.0 * p.mu * mf * s.v * u.v / (eta.v * eta.v)
    }

    /// `F = G/(η^mη_r)`, the force in the pointwise momentum equation.
    pub fn pointwise_force(&self, t: f64, grid: &RadialGrid) -> Vec<f64> {
        let m = self.params.m() as i32;
        grid.sample(|r| self.weak_force(t, r) / (Self::eta(t, r).powi(m) * Self::eta_r(t, r)))
    }
}

impl BodyForce for Manufactured {
    fn weak_density(&self, t: f64, grid: &RadialGrid) -> Vec<f64> {
        grid.sample(|r| self.weak_force(t, r))
    }
}
