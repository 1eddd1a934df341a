//! Runtime monitors evaluated on a whole trajectory.

use std::collections::BTreeMap;

use lagvac_core::diagnostics::{
    bounds_monitor, energy_history, fundamental_energy_balance, BalanceStep, BoundsReport, EnergyReport,
};
use lagvac_core::eigen::EigenBasis;
use lagvac_core::initial::InitialFields;
use lagvac_core::lagrangian::{density_from_flow, mass, LagrangianState};
use lagvac_core::RadialGrid;

use crate::config::MonitorThresholds;
use crate::error::CliResult;

/// Diagnostics of a trajectory and the pass/fail state of each monitor.
#[derive(Debug, Clone)]
pub struct MonitorReport {
    pub masses: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
    pub bounds: Vec<BoundsReport>,
    pub balance: Vec<BalanceStep>,
    /// Empty when the trajectory has fewer than three states.
    pub energies: Vec<EnergyReport>,
    pub monitors: BTreeMap<String, bool>,
    pub worst: BTreeMap<String, f64>,
}

impl MonitorReport {
    pub fn pass(&self) -> bool {
        self.monitors.values().all(|p| *p)
    }
}

pub fn evaluate(
    states: &[LagrangianState],
    fields: &InitialFields,
    basis: &EigenBasis,
    grid: &RadialGrid,
    thresholds: &MonitorThresholds,
) -> CliResult<MonitorReport> {
    let mut masses = Vec::with_capacity(states.len());
    let mut densities = Vec::with_capacity(states.len());
    let mut bounds = Vec::with_capacity(states.len());
    for s in states {
        masses.push(mass(s, &fields.rho0, grid)?);
        densities.push(density_from_flow(s, &fields.rho0, grid)?);
        bounds.push(bounds_monitor(s, fields, grid)?);
    }
    let balance = fundamental_energy_balance(states, fields, grid)?;
    let energies = if states.len() >= 3 { energy_history(states, fields, basis, grid, false)? } else { Vec::new() };

    let mut monitors = BTreeMap::new();
    let mut worst = BTreeMap::new();
    let mut record = |name: &str, value: f64, pass: bool| {
        worst.insert(name.to_string(), value);
        monitors.insert(name.to_string(), pass);
    };

    let m0 = fields.mass(grid);
    let drift = masses.iter().fold(0.0f64, |a, m| a.max((m - m0).abs() / m0));
    record("mass", drift, drift <= thresholds.mass_rel_tol);

    let (lo, hi) = thresholds.flow_bounds;
    let flow_lo = bounds.iter().fold(f64::INFINITY, |a, b| a.min(b.eta_r_min).min(b.eta_over_r_min));
    let flow_hi = bounds.iter().fold(f64::NEG_INFINITY, |a, b| a.max(b.eta_r_max).max(b.eta_over_r_max));
    record("flow_bounds_min", flow_lo, bounds.iter().all(|b| b.within(lo, hi)));
    record("flow_bounds_max", flow_hi, bounds.iter().all(|b| b.within(lo, hi)));

    let (qlo, qhi) = thresholds.density_interval(fields.params.n);
    let q_lo = bounds.iter().fold(f64::INFINITY, |a, b| a.min(b.rho_ratio_min));
    let q_hi = bounds.iter().fold(f64::NEG_INFINITY, |a, b| a.max(b.rho_ratio_max));
    let q_ok = q_lo >= qlo && q_hi <= qhi;
    record("density_ratio_min", q_lo, q_ok);
    record("density_ratio_max", q_hi, q_ok);

    let boundary =
        bounds.iter().fold(0.0f64, |a, b| a.max(if b.u_r_sup > 0.0 { b.u_r_boundary / b.u_r_sup } else { 0.0 }));
    record("boundary_condition", boundary, boundary <= thresholds.boundary_rel_tol);

    let asym = bounds.iter().fold(0.0f64, |a, b| a.max(b.asymptotic_constant));
    record("asymptotic_constant", asym, bounds.iter().all(|b| b.is_finite()));

    let bd = bounds.iter().fold(0.0f64, |a, b| a.max(b.bd_density).max(b.bd_velocity));
    record("bd_interior", bd, bd.is_finite());

    let e_max = energies.iter().fold(0.0f64, |a, e| a.max(e.E_total).max(e.D_total));
    let e_ok = energies.iter().all(|e| e.E_total.is_finite() && e.D_total.is_finite());
    record("energy_functionals", e_max, e_ok);

    let e0 = balance.first().map(|b| b.energy_start).unwrap_or(0.0);
    let res = balance.iter().fold(0.0f64, |a, b| a.max(b.residual.abs()));
    let res_tol = thresholds.energy_residual_rel_tol * e0;
    record("energy_residual", res, res <= res_tol);
    // E_{n+1} − E_n may exceed zero only by the allowed residual times dt.
    let rise = states
        .windows(2)
        .zip(&balance)
        .map(|(w, b)| (b.energy_end - b.energy_start) - (w[1].t - w[0].t) * res_tol)
        .fold(f64::NEG_INFINITY, f64::max);
    record("energy_decay", rise.max(0.0), rise <= 0.0);

    Ok(MonitorReport { masses, densities, bounds, balance, energies, monitors, worst })
}
