//! State of the radial Lagrangian problem.
//!
//! The unknowns are the velocity `U(t, r)` and the flow map `η(t, r)` with
//! `η_t = U`. The density is never stored; it is recovered from the mass
//! identity `ρ η^m η_r = r^m ρ0`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::RadialGrid;
use crate::initial::{InitialFields, PhysicalParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianState {
    pub t: f64,
    pub u: Vec<f64>,
    /// `U_r`, exact modal derivative when the state comes from the solver.
    pub u_r: Vec<f64>,
    pub eta: Vec<f64>,
    pub eta_r: Vec<f64>,
    pub params: PhysicalParams,
    pub modal_u: Option<Vec<f64>>,
}

impl LagrangianState {
    /// State with identity flow map `η = r` at time `t`.
    pub fn identity(t: f64, u: Vec<f64>, params: PhysicalParams, grid: &RadialGrid) -> Result<Self> {
        check_len(grid.len(), u.len())?;
        let u_r = grid.differentiate(&u)?;
        Ok(Self { t, u, u_r, eta: grid.nodes().to_vec(), eta_r: vec![1.0; grid.len()], params, modal_u: None })
    }

    /// `η = c·r`, `U = w`; a convenient test state.
    pub fn dilation(c: f64, u: Vec<f64>, params: PhysicalParams, grid: &RadialGrid) -> Result<Self> {
        let mut s = Self::identity(0.0, u, params, grid)?;
        s.eta.iter_mut().for_each(|e| *e *= c);
        s.eta_r.iter_mut().for_each(|e| *e = c);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    fn check(&self, grid: &RadialGrid) -> Result<()> {
        check_len(grid.len(), self.u.len())?;
        check_len(grid.len(), self.u_r.len())?;
        check_len(grid.len(), self.eta.len())?;
        check_len(grid.len(), self.eta_r.len())?;
        self.check_positive()
    }

    fn check_positive(&self) -> Result<()> {
        if let Some(i) = self.eta_r.iter().position(|e| !(*e > 0.0)) {
            return Err(Error::degeneracy(self.t, alloc::format!("eta_r = {} at node {i}", self.eta_r[i])));
        }
        if let Some(i) = self.eta.iter().position(|e| !(*e > 0.0)) {
            return Err(Error::degeneracy(self.t, alloc::format!("eta = {} at node {i}", self.eta[i])));
        }
        Ok(())
    }

    /// `η^m η_r`.
    pub fn jacobian(&self) -> Vec<f64> {
        let m = self.params.m() as i32;
        self.eta.iter().zip(&self.eta_r).map(|(e, er)| e.powi(m) * er).collect()
    }

    /// `U/η`, evaluated as `(U/r)(r/η)` so both factors stay regular near
    /// the origin.
    pub fn u_over_eta(&self, grid: &RadialGrid) -> Vec<f64> {
        self.u.iter().zip(&self.eta).zip(grid.nodes()).map(|((u, e), r)| (u / r) * (r / e)).collect()
    }
}

/// `ρ = r^m ρ0/(η^m η_r)`.
pub fn density_from_flow(state: &LagrangianState, rho0: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    state.check(grid)?;
    check_len(grid.len(), rho0.len())?;
    let m = grid.m() as i32;
    Ok(grid
        .nodes()
        .iter()
        .zip(rho0)
        .zip(state.eta.iter().zip(&state.eta_r))
        .map(|((r, p), (e, er))| (r / e).powi(m) * p / er)
        .collect())
}

/// `D_η f = f_r/η_r`.
pub fn d_eta(f: &[f64], state: &LagrangianState, grid: &RadialGrid) -> Result<Vec<f64>> {
    state.check(grid)?;
    let df = grid.differentiate(f)?;
    Ok(df.iter().zip(&state.eta_r).map(|(d, e)| d / e).collect())
}

/// `∫ η^m η_r ρ dr`; equals `∫ r^m ρ0 dr` identically.
pub fn mass(state: &LagrangianState, rho0: &[f64], grid: &RadialGrid) -> Result<f64> {
    let rho = density_from_flow(state, rho0, grid)?;
    let j = state.jacobian();
    Ok(grid.integrate_product(&j, &rho))
}

/// Pointwise residual of
/// `ρU_t + A D_η(ρ^γ) − 2μ D_η(ρ(D_η U + mU/η)) + 2μ m U D_η ρ/η − F`.
pub fn momentum_residual(
    state: &LagrangianState,
    u_t: &[f64],
    fields: &InitialFields,
    forcing: Option<&[f64]>,
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    state.check(grid)?;
    check_len(grid.len(), u_t.len())?;
    if let Some(f) = forcing {
        check_len(grid.len(), f.len())?;
    }
    let p = &state.params;
    let mf = p.m() as f64;
    let rho = density_from_flow(state, &fields.rho0, grid)?;
    let u_eta = state.u_over_eta(grid);
    let pressure: Vec<f64> = rho.iter().map(|r| r.powf(p.gamma)).collect();
    let d_pressure = d_eta(&pressure, state, grid)?;
    let flux: Vec<f64> = (0..grid.len()).map(|i| rho[i] * (state.u_r[i] / state.eta_r[i] + mf * u_eta[i])).collect();
    let d_flux = d_eta(&flux, state, grid)?;
    let d_rho = d_eta(&rho, state, grid)?;
    Ok((0..grid.len())
        .map(|i| {
            rho[i] * u_t[i] + p.a * d_pressure[i] - 2.0 * p.mu * d_flux[i] + 2.0 * p.mu * mf * u_eta[i] * d_rho[i]
                - forcing.map_or(0.0, |f| f[i])
        })
        .collect())
}

/// Effective velocity `V = U + 2μ D_η log ρ`, optionally with the running
/// damping integral `∫₀^t ρ^{γ−1} ds` of the transport route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveVelocityField {
    pub v: Vec<f64>,
    pub accumulated_damping: Option<Vec<f64>>,
}

/// `V = U + 2μ η^m ρ_r/(r^m ρ0)` from a single state.
///
/// `ρ_r/ρ` is expanded as
/// `(log ρ0)_r + m/r − m η_r/η − η_rr/η_r`, so only the smooth Jacobian is
/// differentiated on the grid; `(log ρ0)_r` is taken from the initial data
/// as `(v0 − u0)/2μ`, which is analytic for the example family.
pub fn effective_velocity(
    state: &LagrangianState,
    fields: &InitialFields,
    grid: &RadialGrid,
) -> Result<EffectiveVelocityField> {
    state.check(grid)?;
    check_len(grid.len(), fields.rho0.len())?;
    if fields.rho0.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::domain("density must be positive at every node"));
    }
    let mu = state.params.mu;
    let mf = state.params.m() as f64;
    let eta_rr = grid.differentiate(&state.eta_r)?;
    let v = (0..grid.len())
        .map(|i| {
            let r = grid.nodes()[i];
            let log_rho0_r = (fields.v0[i] - fields.u0[i]) / (2.0 * fields.params.mu);
            // m/r − m η_r/η = m(η − r η_r)/(r η)
            let geometric = mf * (state.eta[i] - r * state.eta_r[i]) / (r * state.eta[i]);
            let log_rho_r = log_rho0_r + geometric - eta_rr[i] / state.eta_r[i];
            state.u[i] + 2.0 * mu * log_rho_r / state.eta_r[i]
        })
        .collect();
    Ok(EffectiveVelocityField { v, accumulated_damping: None })
}

/// Duhamel solution of the damped transport equation
/// `V_t + (Aγ/2μ) ρ^{γ−1}(V − U) = 0` from `v0`, by the trapezoidal rule on
/// the stored history.
pub fn effective_velocity_closed_form(
    v0: &[f64],
    times: &[f64],
    rho_history: &[Vec<f64>],
    u_history: &[Vec<f64>],
    params: &PhysicalParams,
) -> Result<EffectiveVelocityField> {
    check_len(times.len(), rho_history.len())?;
    check_len(times.len(), u_history.len())?;
    if times.is_empty() {
        return Err(Error::Shape { expected: 1, got: 0 });
    }
    for (rho, u) in rho_history.iter().zip(u_history) {
        check_len(v0.len(), rho.len())?;
        check_len(v0.len(), u.len())?;
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("time levels must be strictly increasing"));
    }
    let c = params.a * params.gamma / (2.0 * params.mu);
    let g1 = params.gamma - 1.0;
    let mut damping = vec![0.0; v0.len()];
    // source accumulates (Aγ/2μ)∫ ρ^{γ−1} U e^{−(Aγ/2μ)∫_τ^t ρ^{γ−1}} dτ
    let mut source = vec![0.0; v0.len()];
    for n in 0..times.len() - 1 {
        let dt = times[n + 1] - times[n];
        for i in 0..v0.len() {
            let a0 = rho_history[n][i].powf(g1);
            let a1 = rho_history[n + 1][i].powf(g1);
            let step = 0.5 * dt * (a0 + a1);
            let decay = (-c * step).exp();
            source[i] = source[i] * decay + 0.5 * dt * c * (a0 * u_history[n][i] * decay + a1 * u_history[n + 1][i]);
            damping[i] += step;
        }
    }
    let v = (0..v0.len()).map(|i| v0[i] * (-c * damping[i]).exp() + source[i]).collect();
    Ok(EffectiveVelocityField { v, accumulated_damping: Some(damping) })
}

/// Advances `η` and `η_r` by the trapezoidal rule in time.
pub fn advance_flow(state: &LagrangianState, u_next: &[f64], u_r_next: &[f64], dt: f64) -> Result<LagrangianState> {
    if !(dt > 0.0) {
        return Err(Error::domain("time step must be positive"));
    }
    check_len(state.len(), u_next.len())?;
    check_len(state.len(), u_r_next.len())?;
    let h = 0.5 * dt;
    let next = LagrangianState {
        t: state.t + dt,
        u: u_next.to_vec(),
        u_r: u_r_next.to_vec(),
        eta: state.eta.iter().zip(&state.u).zip(u_next).map(|((e, a), b)| e + h * (a + b)).collect(),
        eta_r: state.eta_r.iter().zip(&state.u_r).zip(u_r_next).map(|((e, a), b)| e + h * (a + b)).collect(),
        params: state.params,
        modal_u: None,
    };
    next.check_positive()?;
    Ok(next)
}
