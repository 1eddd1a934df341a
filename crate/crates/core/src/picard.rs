//! Picard iteration for the nonlinear problem and time-window continuation.
//!
//! Each iterate solves the linear Galerkin problem with the previous
//! iterate's flow map as background, then rebuilds the flow map by
//! integrating the new velocity in time. Iterations stop when the
//! contraction energy of the velocity increment falls below a tolerance.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::eigen::EigenBasis;
use crate::error::{check_len, Error, Result};
use crate::galerkin::{step_count, BackgroundFlow, BodyForce, GalerkinSystem, DEFAULT_SAFETY};
use crate::grid::RadialGrid;
use crate::initial::InitialFields;
use crate::lagrangian::{advance_flow, LagrangianState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    /// Stopping tolerance on the contraction energy.
    pub tol: f64,
    pub k_max: usize,
    /// Requested local window length; may be halved during continuation.
    pub t_window: f64,
    pub dt: f64,
    /// Galerkin mode count.
    pub n_modes: usize,
    /// Admissible interval for `η_r` and `η/r`.
    pub safety: (f64, f64),
    /// A window is halved while its first contraction ratio exceeds this.
    pub first_ratio_limit: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            k_max: 20,
            t_window: 0.2,
            dt: 1e-3,
            n_modes: 32,
            safety: DEFAULT_SAFETY,
            first_ratio_limit: 0.9,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::config("picard tolerance must be positive"));
        }
        if self.k_max < 1 {
            return Err(Error::config("k_max must be at least 1"));
        }
        if !(self.dt > 0.0 && self.t_window >= self.dt * (1.0 - 1e-12)) {
            return Err(Error::config("need 0 < dt <= t_window"));
        }
        if self.n_modes < 1 {
            return Err(Error::config("mode count N must be at least 1"));
        }
        if !(self.safety.0 > 0.0 && self.safety.0 < 1.0 && self.safety.1 > 1.0) {
            return Err(Error::config("safety interval must contain 1 and stay positive"));
        }
        if !(self.first_ratio_limit > 0.0) {
            return Err(Error::config("first_ratio_limit must be positive"));
        }
        Ok(())
    }

    fn window_steps(&self) -> usize {
        ((self.t_window / self.dt).round() as usize).max(1)
    }
}

/// Contraction energies `Ê_k` of one window.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub energies: Vec<f64>,
    /// `Ê_{k+1}/Ê_k`
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl IterationTrace {
    fn push(&mut self, e: f64) {
        if let Some(&last) = self.energies.last() {
            self.ratios.push(if last > 0.0 { e / last } else { 0.0 });
        }
        self.energies.push(e);
        self.iterations = self.energies.len();
    }
}

/// `Ê = sup_t ∫ r^mρ0 Û² + ∫₀^T ∫ r^mρ0 (Û_r² + m Û²/r²)` for the
/// increment `Û = U_new − U_old` between two trajectories on the same time
/// levels. `U_r` is taken from the states.
pub fn contraction_energy(
    new: &[LagrangianState],
    old: &[LagrangianState],
    rho0: &[f64],
    grid: &RadialGrid,
) -> Result<f64> {
    check_len(new.len(), old.len())?;
    check_len(grid.len(), rho0.len())?;
    let m = grid.m() as i32;
    let mf = m as f64;
    let ws: Vec<f64> = grid.weights().iter().zip(grid.nodes()).zip(rho0).map(|((w, r), p)| w * r.powi(m) * p).collect();
    let mut sup: f64 = 0.0;
    let mut integral = 0.0;
    let mut prev_rate: Option<(f64, f64)> = None;
    for (a, b) in new.iter().zip(old) {
        check_len(grid.len(), a.u.len())?;
        check_len(grid.len(), b.u.len())?;
        if (a.t - b.t).abs() > 1e-12 * a.t.abs().max(1.0) {
            return Err(Error::domain("trajectories are on different time levels"));
        }
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        for i in 0..grid.len() {
            let r = grid.nodes()[i];
            let du = a.u[i] - b.u[i];
            let dur = a.u_r[i] - b.u_r[i];
            l2 += ws[i] * du * du;
            h1 += ws[i] * (dur * dur + mf * du * du / (r * r));
        }
        sup = sup.max(l2);
        if let Some((t0, h0)) = prev_rate {
            integral += 0.5 * (a.t - t0) * (h0 + h1);
        }
        prev_rate = Some((a.t, h1));
    }
    Ok(sup + integral)
}

enum WindowOutcome {
    Converged(Vec<LagrangianState>, IterationTrace),
    RatioExceeded(IterationTrace),
}

/// Flow-map trajectory of a velocity history started from `start`.
fn integrate_flow(
    start: &LagrangianState,
    velocities: &[(Vec<f64>, Vec<f64>, Vec<f64>)],
    dt: f64,
) -> Result<Vec<LagrangianState>> {
    let mut out = Vec::with_capacity(velocities.len());
    let mut first = start.clone();
    first.u = velocities[0].0.clone();
    first.u_r = velocities[0].1.clone();
    first.modal_u = Some(velocities[0].2.clone());
    out.push(first);
    for (u, ur, c) in &velocities[1..] {
        let mut next = advance_flow(out.last().unwrap(), u, ur, dt)?;
        next.modal_u = Some(c.clone());
        out.push(next);
    }
    Ok(out)
}

fn check_bounds(states: &[LagrangianState], grid: &RadialGrid, safety: (f64, f64)) -> Result<()> {
    for s in states {
        let (lo, hi) = BackgroundFlow::from_state(s).extremes(grid);
        if !(lo >= safety.0 && hi <= safety.1) {
            return Err(Error::degeneracy(
                s.t,
                format!("(eta_r, eta/r) range [{lo}, {hi}] left [{}, {}]", safety.0, safety.1),
            ));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn iterate(
    system: &GalerkinSystem<'_>,
    fields: &InitialFields,
    start: &LagrangianState,
    steps: usize,
    config: &PicardConfig,
    grid: &RadialGrid,
    source: Option<&dyn BodyForce>,
    ratio_gate: Option<f64>,
) -> Result<WindowOutcome> {
    let dt = config.dt;
    let c0 = match &start.modal_u {
        Some(c) => c.clone(),
        None => system.basis.project(&start.u, grid)?,
    };
    let (u0, u0_r) = system.nodal(&c0);

    // U⁰ ≡ start velocity, η⁰ = η_init + (t − t0)U⁰
    let constant: Vec<_> = (0..=steps).map(|_| (u0.clone(), u0_r.clone(), c0.clone())).collect();
    let mut previous = integrate_flow(start, &constant, dt)?;
    let mut trace = IterationTrace::default();

    for _ in 0..config.k_max {
        let backgrounds: Vec<BackgroundFlow> = previous.iter().map(BackgroundFlow::from_state).collect();
        let history = system.run(&c0, start.t, dt, &backgrounds, source)?;
        let velocities: Vec<_> = history
            .into_iter()
            .map(|c| {
                let (u, ur) = system.nodal(&c);
                (u, ur, c)
            })
            .collect();
        let current = integrate_flow(start, &velocities, dt)?;
        let e = contraction_energy(&current, &previous, &fields.rho0, grid)?;
        trace.push(e);
        if e <= config.tol {
            trace.converged = true;
            check_bounds(&current, grid, config.safety)?;
            return Ok(WindowOutcome::Converged(current, trace));
        }
        if let (Some(limit), Some(&ratio)) = (ratio_gate, trace.ratios.first()) {
            if trace.ratios.len() == 1 && ratio > limit {
                return Ok(WindowOutcome::RatioExceeded(trace));
            }
        }
        previous = current;
    }
    Err(Error::NonConvergence { trace })
}

/// One Picard window of `config.t_window` from `start`.
pub fn picard_window(
    fields: &InitialFields,
    start: &LagrangianState,
    config: &PicardConfig,
    basis: &EigenBasis,
    grid: &RadialGrid,
    source: Option<&dyn BodyForce>,
) -> Result<(Vec<LagrangianState>, IterationTrace)> {
    config.validate()?;
    let system = GalerkinSystem::new(fields, basis, grid)?.with_safety(config.safety.0, config.safety.1);
    match iterate(&system, fields, start, config.window_steps(), config, grid, source, None)? {
        WindowOutcome::Converged(states, trace) => Ok((states, trace)),
        WindowOutcome::RatioExceeded(trace) => Err(Error::NonConvergence { trace }),
    }
}

/// Initial state: identity flow and the projection of `u0`.
pub fn initial_state(fields: &InitialFields, basis: &EigenBasis, grid: &RadialGrid) -> Result<LagrangianState> {
    let c0 = basis.project(&fields.u0, grid)?;
    let u = basis.reconstruct(&c0)?;
    let u_r = basis.reconstruct_derivative(&c0)?;
    Ok(LagrangianState {
        t: 0.0,
        u,
        u_r,
        eta: grid.nodes().to_vec(),
        eta_r: alloc::vec![1.0; grid.len()],
        params: fields.params,
        modal_u: Some(c0),
    })
}

/// Per-window record of a continuation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    /// Number of times the window was halved before it was accepted.
    pub halvings: usize,
    pub trace: IterationTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    /// States at every time level of `[0, T]`, window boundaries once.
    pub states: Vec<LagrangianState>,
    pub windows: Vec<WindowRecord>,
}

/// Chains Picard windows over `[0, T]`, each restarted from the previous
/// window's final state. A window is halved while its first contraction
/// ratio exceeds `config.first_ratio_limit`.
pub fn solve_global(
    fields: &InitialFields,
    horizon: f64,
    config: &PicardConfig,
    basis: &EigenBasis,
    grid: &RadialGrid,
    source: Option<&dyn BodyForce>,
) -> Result<SimulationRecord> {
    config.validate()?;
    let total = step_count(horizon, config.dt)?;
    let system = GalerkinSystem::new(fields, basis, grid)?.with_safety(config.safety.0, config.safety.1);
    let start = initial_state(fields, basis, grid)?;
    check_bounds(core::slice::from_ref(&start), grid, config.safety)?;
    let mut states = alloc::vec![start];
    let mut windows = Vec::new();
    let mut done = 0;
    let mut window = config.window_steps();
    let continuation = |t: f64, reason: String| Error::Continuation { last_good_time: t, reason };

    while done < total {
        let mut halvings = 0;
        loop {
            let steps = window.min(total - done);
            let start = states.last().unwrap().clone();
            let gate = (steps > 1).then_some(config.first_ratio_limit);
            let outcome = iterate(&system, fields, &start, steps, config, grid, source, gate).map_err(|e| match e {
                Error::NonConvergence { trace } => {
                    continuation(start.t, format!("picard window did not converge in {} iterations", trace.iterations))
                }
                other => other,
            })?;
            match outcome {
                WindowOutcome::Converged(window_states, trace) => {
                    let t_end = window_states.last().unwrap().t;
                    windows.push(WindowRecord { t_start: start.t, t_end, steps, halvings, trace });
                    states.extend(window_states.into_iter().skip(1));
                    done += steps;
                    break;
                }
                WindowOutcome::RatioExceeded(trace) => {
                    if steps == 1 {
                        return Err(continuation(
                            start.t,
                            format!("first contraction ratio {} above limit at the smallest window", trace.ratios[0]),
                        ));
                    }
                    window = steps.div_ceil(2);
                    halvings += 1;
                }
            }
        }
    }
    // Keep time levels exact multiples of dt.
    for (n, s) in states.iter_mut().enumerate() {
        s.t = n as f64 * config.dt;
    }
    let mut first = 0;
    for w in windows.iter_mut() {
        w.t_start = states[first].t;
        first += w.steps;
        w.t_end = states[first].t;
    }
    Ok(SimulationRecord { states, windows })
}
