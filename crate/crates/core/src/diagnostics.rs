//! Weighted energy and dissipation functionals, the basic energy balance and
//! the a priori bound monitors evaluated along a trajectory.
//!
//! Derivatives along the flow, `D_η = ∂_r/η_r`, are expanded by the chain
//! rule on truncated Taylor jets, so only `r`-derivatives of the velocity and
//! of the flow map enter. The velocity derivatives come from the modal
//! coefficients; the higher flow-map derivatives are integrated in time with
//! the same trapezoid rule that advances `η` itself.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::cutoff::{cutoff_value, CutoffKind};
use crate::eigen::EigenBasis;
use crate::error::{check_len, Error, Result};
use crate::grid::{GridSpec, RadialGrid};
use crate::initial::{InitialFields, PhysicalParams};
use crate::jet::{jet_d, jet_mul, jet_recip};
use crate::lagrangian::{density_from_flow, effective_velocity, mass, momentum_residual, LagrangianState};

/// Number of `r`-derivatives carried for the velocity and the flow map.
const JET: usize = 5;

/// Centre of the interior cutoff `ζ = ζ_{1/2}`: one on `[0, 1/2]`, zero on `[5/8, 1]`.
pub const INTERIOR_CUTOFF: f64 = 0.5;

/// `ε0` at the midpoint of its admissible interval.
pub fn select_epsilon0(params: &PhysicalParams) -> Result<f64> {
    let (b, g) = (params.beta, params.gamma);
    let balanced = params.is_balanced();
    if !(b > 1.0 / 3.0) || (!balanced && b > g - 1.0) {
        return Err(Error::config(alloc::format!("beta outside (1/3, gamma-1]: beta = {b}, gamma = {g}")));
    }
    let mut upper = (1.5 - 0.5 / b).min(0.5);
    if !balanced {
        upper = upper.min((g - 1.0) / b - 1.0);
    }
    if !(upper > 0.0) {
        return Err(Error::config("admissible interval for epsilon0 is empty"));
    }
    Ok(0.5 * upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EnergyReport {
    pub t: f64,
    pub epsilon0: f64,
    pub E_in: f64,
    pub E_ex: f64,
    pub D_in: f64,
    pub D_ex: f64,
    pub E_total: f64,
    pub D_total: f64,
    pub mass: f64,
    /// Same functionals with `η` replaced by `r`.
    pub ring_E: Option<f64>,
    pub ring_D: Option<f64>,
}

/// Nodal derivatives needed by [`energy_functionals`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDerivatives {
    /// `U, U_r, …, ∂_r⁴U`
    pub u: Vec<Vec<f64>>,
    /// `U_t, U_tr, U_trr`
    pub u_t: Vec<Vec<f64>>,
    pub u_tt: Vec<f64>,
    /// `η, η_r, …, ∂_r⁴η`
    pub eta: Vec<Vec<f64>>,
}

impl StateDerivatives {
    fn check(&self, grid: &RadialGrid) -> Result<()> {
        check_len(JET, self.u.len())?;
        check_len(3, self.u_t.len())?;
        check_len(JET, self.eta.len())?;
        for f in self.u.iter().chain(&self.u_t).chain(&self.eta).chain(core::iter::once(&self.u_tt)) {
            check_len(grid.len(), f.len())?;
        }
        Ok(())
    }

    /// Derivatives along a stored trajectory with uniform time step.
    ///
    /// Time derivatives are centred differences of the modal coefficients,
    /// second-order one-sided at the ends. `∂_r^kη` for `k ≥ 2` starts from
    /// nodal derivatives of the first state and is advanced with the
    /// trapezoid rule applied to `∂_r^kU`.
    pub fn from_trajectory(states: &[LagrangianState], basis: &EigenBasis, grid: &RadialGrid) -> Result<Vec<Self>> {
        if states.len() < 3 {
            return Err(Error::domain("need at least three time levels for time derivatives"));
        }
        let dt = states[1].t - states[0].t;
        if !(dt > 0.0) || states.windows(2).any(|w| ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt) {
            return Err(Error::domain("trajectory time step must be uniform and positive"));
        }
        let coeffs: Vec<Vec<f64>> = states
            .iter()
            .map(|s| match &s.modal_u {
                Some(c) => Ok(c.clone()),
                None => basis.project(&s.u, grid),
            })
            .collect::<Result<_>>()?;
        let n = states.len();
        let combo = |w: &[(usize, f64)]| -> Vec<f64> {
            let mut out = vec![0.0; coeffs[0].len()];
            for &(k, c) in w {
                for (o, v) in out.iter_mut().zip(&coeffs[k]) {
                    *o += c * v;
                }
            }
            out
        };
        let (h, h2) = (1.0 / (2.0 * dt), 1.0 / (dt * dt));

        let mut eta_hi: Vec<Vec<f64>> = Vec::with_capacity(JET - 2);
        let mut d = grid.differentiate(&states[0].eta_r)?;
        for _ in 2..JET {
            let next = grid.differentiate(&d)?;
            eta_hi.push(d);
            d = next;
        }

        let mut out = Vec::with_capacity(n);
        let mut prev_u: Option<Vec<Vec<f64>>> = None;
        for (k, s) in states.iter().enumerate() {
            let u: Vec<Vec<f64>> = (0..JET).map(|d| basis.reconstruct_nth(&coeffs[k], d)).collect::<Result<_>>()?;
            if let Some(p) = &prev_u {
                for (j, e) in eta_hi.iter_mut().enumerate() {
                    // ∂_r^{j+2}η advances with ∂_r^{j+2}U
                    for i in 0..e.len() {
                        e[i] += 0.5 * dt * (p[j + 2][i] + u[j + 2][i]);
                    }
                }
            }
            let (ct, ctt) = if k == 0 {
                (combo(&[(0, -3.0 * h), (1, 4.0 * h), (2, -h)]), tt_start(&combo, 0, 1, n, h2))
            } else if k == n - 1 {
                (combo(&[(k, 3.0 * h), (k - 1, -4.0 * h), (k - 2, h)]), tt_start(&combo, k, -1, n, h2))
            } else {
                (combo(&[(k + 1, h), (k - 1, -h)]), combo(&[(k + 1, h2), (k, -2.0 * h2), (k - 1, h2)]))
            };
            let u_t = (0..3).map(|d| basis.reconstruct_nth(&ct, d)).collect::<Result<_>>()?;
            let u_tt = basis.reconstruct(&ctt)?;
            let mut eta = vec![s.eta.clone(), s.eta_r.clone()];
            eta.extend(eta_hi.iter().cloned());
            out.push(Self { u: u.clone(), u_t, u_tt, eta });
            prev_u = Some(u);
        }
        Ok(out)
    }
}

/// Linear combination of modal time levels, evaluated at the nodes.
type Combination<'a> = dyn Fn(&[(usize, f64)]) -> Vec<f64> + 'a;

/// One-sided second difference at a trajectory end, second order when four
/// levels are available.
fn tt_start(combo: &Combination, k: usize, dir: isize, n: usize, h2: f64) -> Vec<f64> {
    let at = |j: isize| (k as isize + dir * j) as usize;
    if n >= 4 {
        combo(&[(at(0), 2.0 * h2), (at(1), -5.0 * h2), (at(2), 4.0 * h2), (at(3), -h2)])
    } else {
        combo(&[(at(0), h2), (at(1), -2.0 * h2), (at(2), h2)])
    }
}

/// Squared pointwise quantities of the energy and dissipation functionals.
struct Pointwise {
    e_in: f64,
    e_ex_low: f64,
    e_ex_high: f64,
    d_in: f64,
    d_ex_low: f64,
    d_ex_high: f64,
}

fn pointwise(f: &[f64], ft: &[f64], ftt: f64, eta: &[f64]) -> Pointwise {
    let inv_er = jet_recip(&eta[1..]);
    let inv_e = jet_recip(eta);
    let df = jet_d(f, &inv_er);
    let d2f = jet_d(&df, &inv_er);
    let d3f = jet_d(&d2f, &inv_er);
    let d4f = jet_d(&d3f, &inv_er);
    let fe = jet_mul(f, &inv_e);
    let dfe = jet_d(&fe, &inv_er);
    let d2fe = jet_d(&dfe, &inv_er);
    let d3fe = jet_d(&d2fe, &inv_er);
    let e_dfe = jet_mul(&inv_e, &dfe);
    let d_e_dfe = jet_d(&e_dfe, &inv_er);
    let dft = jet_d(ft, &inv_er);
    let d2ft = jet_d(&dft, &inv_er);
    let fte = jet_mul(ft, &inv_e);
    let dfte = jet_d(&fte, &inv_er);

    let sq = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>();
    Pointwise {
        e_in: sq(&[f[0], df[0], fe[0], ft[0], dft[0], fte[0], d2f[0], dfe[0], d3f[0], d2fe[0], e_dfe[0]]),
        e_ex_low: sq(&[f[0], df[0], ft[0], dft[0]]),
        e_ex_high: sq(&[d2f[0], d3f[0]]),
        d_in: sq(&[ftt, d2ft[0], dfte[0], d4f[0], d3fe[0], d_e_dfe[0]]),
        d_ex_low: ftt * ftt,
        d_ex_high: sq(&[d2ft[0], d4f[0]]),
    }
}

/// Node-wise weights of the interior and exterior integrals.
struct Weights {
    interior: Vec<f64>,
    exterior_low: Vec<f64>,
    exterior_high: Vec<f64>,
}

fn weights(fields: &InitialFields, eps0: f64, grid: &RadialGrid) -> Weights {
    let m = grid.m() as i32;
    let high = (3.0 - 2.0 * eps0) * fields.params.beta;
    let mut w = Weights { interior: Vec::new(), exterior_low: Vec::new(), exterior_high: Vec::new() };
    for ((r, q), rho) in grid.nodes().iter().zip(grid.weights()).zip(&fields.rho0) {
        let z = cutoff_value(CutoffKind::Smooth, INTERIOR_CUTOFF, *r);
        let chi = cutoff_value(CutoffKind::SharpComplement, INTERIOR_CUTOFF, *r);
        w.interior.push(q * z * z * r.powi(m));
        w.exterior_low.push(q * chi * rho);
        w.exterior_high.push(q * chi * rho.powf(high));
    }
    w
}

/// `(E_in, E_ex, D_in, D_ex)` for one set of jets.
fn functionals(d: &StateDerivatives, eta: &[Vec<f64>], w: &Weights, with_dissipation: bool) -> [f64; 4] {
    let mut acc = [0.0; 4];
    let n = w.interior.len();
    for i in 0..n {
        let f: Vec<f64> = d.u.iter().map(|c| c[i]).collect();
        let ft: Vec<f64> = d.u_t.iter().map(|c| c[i]).collect();
        let e: Vec<f64> = eta.iter().map(|c| c[i]).collect();
        let ftt = if with_dissipation { d.u_tt[i] } else { 0.0 };
        let p = pointwise(&f, &ft, ftt, &e);
        acc[0] += w.interior[i] * p.e_in;
        acc[1] += w.exterior_low[i] * p.e_ex_low + w.exterior_high[i] * p.e_ex_high;
        if with_dissipation {
            acc[2] += w.interior[i] * p.d_in;
            acc[3] += w.exterior_low[i] * p.d_ex_low + w.exterior_high[i] * p.d_ex_high;
        }
    }
    acc
}

fn ring_jets(grid: &RadialGrid) -> Vec<Vec<f64>> {
    let n = grid.len();
    let mut jets = vec![grid.nodes().to_vec(), vec![1.0; n]];
    jets.extend((2..JET).map(|_| vec![0.0; n]));
    jets
}

/// `E(t, U)` and `D(t, U)` at one state; `ring` adds the variants with `η`
/// replaced by `r`.
pub fn energy_functionals(
    state: &LagrangianState,
    derivs: &StateDerivatives,
    fields: &InitialFields,
    grid: &RadialGrid,
    ring: bool,
) -> Result<EnergyReport> {
    derivs.check(grid)?;
    check_len(grid.len(), fields.rho0.len())?;
    if derivs.eta[1].iter().any(|e| !(*e > 0.0)) || derivs.eta[0].iter().any(|e| !(*e > 0.0)) {
        return Err(Error::degeneracy(state.t, "non-positive flow map in energy evaluation"));
    }
    let eps0 = select_epsilon0(&fields.params)?;
    let w = weights(fields, eps0, grid);
    let [e_in, e_ex, d_in, d_ex] = functionals(derivs, &derivs.eta, &w, true);
    let (ring_e, ring_d) = if ring {
        let [a, b, c, d] = functionals(derivs, &ring_jets(grid), &w, true);
        (Some(a + b), Some(c + d))
    } else {
        (None, None)
    };
    Ok(EnergyReport {
        t: state.t,
        epsilon0: eps0,
        E_in: e_in,
        E_ex: e_ex,
        D_in: d_in,
        D_ex: d_ex,
        E_total: e_in + e_ex,
        D_total: d_in + d_ex,
        mass: mass(state, &fields.rho0, grid)?,
        ring_E: ring_e,
        ring_D: ring_d,
    })
}

/// Energy reports along a trajectory.
pub fn energy_history(
    states: &[LagrangianState],
    fields: &InitialFields,
    basis: &EigenBasis,
    grid: &RadialGrid,
    ring: bool,
) -> Result<Vec<EnergyReport>> {
    let derivs = StateDerivatives::from_trajectory(states, basis, grid)?;
    states.iter().zip(&derivs).map(|(s, d)| energy_functionals(s, d, fields, grid, ring)).collect()
}

/// `E(0, U)` from the initial data alone. `U_t(0)` is obtained from the
/// momentum equation at the identity flow. The `r`-derivatives use the full
/// panel interpolant, since third derivatives of steep profiles are poorly
/// resolved by short stencils.
pub fn initial_energy(fields: &InitialFields, grid: &RadialGrid) -> Result<f64> {
    check_len(grid.len(), fields.u0.len())?;
    let spec = grid.spec();
    let full = GridSpec { stencil_order: spec.nodes_per_panel - 1, ..spec }.build()?;
    let grid = &full;
    let state = LagrangianState::identity(0.0, fields.u0.clone(), fields.params, grid)?;
    let rho = &fields.rho0;
    if rho.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::domain("initial density must be positive at every node"));
    }
    let residual = momentum_residual(&state, &vec![0.0; grid.len()], fields, None, grid)?;
    let ut: Vec<f64> = residual.iter().zip(rho).map(|(r, p)| -r / p).collect();

    let mut u = vec![fields.u0.clone()];
    for k in 1..JET {
        u.push(grid.differentiate(&u[k - 1])?);
    }
    let ut_r = grid.differentiate(&ut)?;
    let ut_rr = grid.differentiate(&ut_r)?;
    let d = StateDerivatives { u, u_t: vec![ut, ut_r, ut_rr], u_tt: vec![0.0; grid.len()], eta: ring_jets(grid) };
    let eps0 = select_epsilon0(&fields.params)?;
    let w = weights(fields, eps0, grid);
    let [e_in, e_ex, ..] = functionals(&d, &d.eta, &w, false);
    Ok(e_in + e_ex)
}

/// `∫ (r^mρ0 U² + 2A/(γ−1) η^mη_r ρ^γ) dr`.
pub fn basic_energy(state: &LagrangianState, fields: &InitialFields, grid: &RadialGrid) -> Result<f64> {
    let p = &state.params;
    let rho = density_from_flow(state, &fields.rho0, grid)?;
    let j = state.jacobian();
    let s = fields.mass_weight(grid);
    let c = 2.0 * p.a / (p.gamma - 1.0);
    let f: Vec<f64> =
        (0..grid.len()).map(|i| s[i] * state.u[i] * state.u[i] + c * j[i] * rho[i].powf(p.gamma)).collect();
    Ok(grid.integrate(&f))
}

/// One step of the discrete basic energy balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceStep {
    /// Midpoint time.
    pub t: f64,
    pub energy_start: f64,
    pub energy_end: f64,
    /// `4μ∫ r^mρ0 (|D_ηU|² + mU²/η²)` at the midpoint.
    pub dissipation: f64,
    /// `(E_{n+1} − E_n)/dt + dissipation`
    pub residual: f64,
}

/// Residual of the basic energy identity on every step of a trajectory.
pub fn fundamental_energy_balance(
    states: &[LagrangianState],
    fields: &InitialFields,
    grid: &RadialGrid,
) -> Result<Vec<BalanceStep>> {
    let s = fields.mass_weight(grid);
    let mf = grid.m() as f64;
    let mut energies = Vec::with_capacity(states.len());
    for st in states {
        energies.push(basic_energy(st, fields, grid)?);
    }
    let mut out = Vec::with_capacity(states.len().saturating_sub(1));
    for (k, w) in states.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        if !(dt > 0.0) {
            return Err(Error::domain("trajectory times must increase"));
        }
        let f: Vec<f64> = (0..grid.len())
            .map(|i| {
                let u = 0.5 * (a.u[i] + b.u[i]);
                let ur = 0.5 * (a.u_r[i] + b.u_r[i]);
                let e = 0.5 * (a.eta[i] + b.eta[i]);
                let er = 0.5 * (a.eta_r[i] + b.eta_r[i]);
                s[i] * ((ur / er).powi(2) + mf * (u / e).powi(2))
            })
            .collect();
        let dissipation = 4.0 * fields.params.mu * grid.integrate(&f);
        let (e0, e1) = (energies[k], energies[k + 1]);
        out.push(BalanceStep {
            t: 0.5 * (a.t + b.t),
            energy_start: e0,
            energy_end: e1,
            dissipation,
            residual: (e1 - e0) / dt + dissipation,
        });
    }
    Ok(out)
}

/// `ρ_r/ρ = (log ρ0)_r + m(η − rη_r)/(rη) − η_rr/η_r`.
fn log_density_gradient(state: &LagrangianState, fields: &InitialFields, grid: &RadialGrid) -> Result<Vec<f64>> {
    let eta_rr = grid.differentiate(&state.eta_r)?;
    let mf = grid.m() as f64;
    let b = fields.params.beta;
    let [g, g1, ..] = fields.distance_function(grid)?;
    Ok((0..grid.len())
        .map(|i| {
            let r = grid.nodes()[i];
            g1[i] / (b * g[i]) + mf * (state.eta[i] - r * state.eta_r[i]) / (r * state.eta[i])
                - eta_rr[i] / state.eta_r[i]
        })
        .collect())
}

/// `(|(ζ_a r^mρ0)^{1/2} V|₂, |(ζ_a η^mη_r)^{1/2} D_η√ρ|₂)`.
pub fn bd_entropy_interior(
    state: &LagrangianState,
    v: &[f64],
    a: f64,
    fields: &InitialFields,
    grid: &RadialGrid,
) -> Result<(f64, f64)> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::config("cutoff center must lie in (0, 1)"));
    }
    check_len(grid.len(), v.len())?;
    let rho = density_from_flow(state, &fields.rho0, grid)?;
    let lr = log_density_gradient(state, fields, grid)?;
    let j = state.jacobian();
    let s = fields.mass_weight(grid);
    let mut first = 0.0;
    let mut second = 0.0;
    for i in 0..grid.len() {
        let z = cutoff_value(CutoffKind::Smooth, a, grid.nodes()[i]);
        if z == 0.0 {
            continue;
        }
        let q = grid.weights()[i] * z;
        // D_η√ρ = ½√ρ (ρ_r/ρ)/η_r
        let d = 0.5 * rho[i].sqrt() * lr[i] / state.eta_r[i];
        first += q * s[i] * v[i] * v[i];
        second += q * j[i] * d * d;
    }
    Ok((first.sqrt(), second.sqrt()))
}

/// Centre of the cutoff used by [`bounds_monitor`] for the interior BD quantity.
pub const BD_CUTOFF: f64 = 0.75;

/// Pointwise monitors of the a priori bounds at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub t: f64,
    pub eta_r_min: f64,
    pub eta_r_max: f64,
    pub eta_over_r_min: f64,
    pub eta_over_r_max: f64,
    pub rho_max: f64,
    pub rho_ratio_min: f64,
    pub rho_ratio_max: f64,
    /// `|(ζ_a r^mρ0)^{1/2}V|₂` and `|(ζ_a η^mη_r)^{1/2}D_η√ρ|₂` at `a = BD_CUTOFF`.
    pub bd_velocity: f64,
    pub bd_density: f64,
    /// `|U_r(t, 1⁻)|` by quadratic extrapolation from the outer nodes.
    pub u_r_boundary: f64,
    pub u_r_sup: f64,
    /// `sup_r |U_r|/(1−r)`
    pub asymptotic_constant: f64,
    /// `sup_{r ≤ 1/2} |V|`
    pub v_sup_interior: f64,
    /// `sup_{r > 1/2} |ρ0^β V|`
    pub v_sup_exterior: f64,
}

impl BoundsReport {
    pub fn is_finite(&self) -> bool {
        [
            self.eta_r_min,
            self.eta_r_max,
            self.eta_over_r_min,
            self.eta_over_r_max,
            self.rho_max,
            self.rho_ratio_min,
            self.rho_ratio_max,
            self.bd_velocity,
            self.bd_density,
            self.u_r_boundary,
            self.u_r_sup,
            self.asymptotic_constant,
            self.v_sup_interior,
            self.v_sup_exterior,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// `η_r` and `η/r` inside `[lo, hi]`.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.eta_r_min >= lo && self.eta_over_r_min >= lo && self.eta_r_max <= hi && self.eta_over_r_max <= hi
    }
}

pub fn bounds_monitor(state: &LagrangianState, fields: &InitialFields, grid: &RadialGrid) -> Result<BoundsReport> {
    let rho = density_from_flow(state, &fields.rho0, grid)?;
    let v = effective_velocity(state, fields, grid)?.v;
    let (bd_velocity, bd_density) = bd_entropy_interior(state, &v, BD_CUTOFF, fields, grid)?;
    let r = grid.nodes();
    let min_max = |it: &mut dyn Iterator<Item = f64>| {
        it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let (er_lo, er_hi) = min_max(&mut state.eta_r.iter().copied());
    let (eo_lo, eo_hi) = min_max(&mut state.eta.iter().zip(r).map(|(e, r)| e / r));
    let (q_lo, q_hi) = min_max(&mut rho.iter().zip(&fields.rho0).map(|(a, b)| a / b));
    let rho_max = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u_r_sup = state.u_r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let asymptotic = state.u_r.iter().zip(r).fold(0.0f64, |a, (u, r)| a.max((u / (1.0 - r)).abs()));
    let b = fields.params.beta;
    let mut v_in = 0.0f64;
    let mut v_ex = 0.0f64;
    for i in 0..grid.len() {
        if r[i] <= 0.5 {
            v_in = v_in.max(v[i].abs());
        } else {
            v_ex = v_ex.max((fields.rho0[i].powf(b) * v[i]).abs());
        }
    }
    Ok(BoundsReport {
        t: state.t,
        eta_r_min: er_lo,
        eta_r_max: er_hi,
        eta_over_r_min: eo_lo,
        eta_over_r_max: eo_hi,
        rho_max,
        rho_ratio_min: q_lo,
        rho_ratio_max: q_hi,
        bd_velocity,
        bd_density,
        u_r_boundary: grid.extrapolate_right_quadratic(&state.u_r).abs(),
        u_r_sup,
        asymptotic_constant: asymptotic,
        v_sup_interior: v_in,
        v_sup_exterior: v_ex,
    })
}
