//! Inverse flow map, Eulerian fields on the moving domain and the
//! radial/multi-dimensional norm equivalences for radial vector fields
//! `g(y) = f(|y|) y/|y|`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::RadialGrid;
use crate::initial::InitialFields;
use crate::jet::{jet_d, jet_mul, jet_recip};
use crate::lagrangian::{density_from_flow, LagrangianState};

/// Tolerance on `|η(r) − x|` accepted by [`invert_flow`].
pub const INVERSION_TOL: f64 = 1e-12;

/// Boundary radius `R(t) = η(t, 1)` from the outer panel interpolant.
pub fn boundary_radius(state: &LagrangianState, grid: &RadialGrid) -> Result<f64> {
    check_len(grid.len(), state.eta.len())?;
    Ok(grid.interpolate(&state.eta, 1.0))
}

fn check_monotone(state: &LagrangianState, grid: &RadialGrid) -> Result<()> {
    check_len(grid.len(), state.eta.len())?;
    check_len(grid.len(), state.eta_r.len())?;
    if let Some(i) = state.eta_r.iter().position(|e| !(*e > 0.0)) {
        return Err(Error::degeneracy(state.t, format!("eta_r = {} at node {i}", state.eta_r[i])));
    }
    if let Some(i) = state.eta.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::degeneracy(state.t, format!("flow map not increasing at node {i}")));
    }
    if !(state.eta[0] > 0.0) {
        return Err(Error::degeneracy(state.t, "flow map is not positive"));
    }
    Ok(())
}

/// `η_*(t, x)`: the Lagrangian radius with `η(t, r) = x`.
///
/// The root is bracketed between consecutive nodes and refined by Newton
/// steps on the panel interpolant, falling back to bisection whenever a step
/// leaves the bracket.
pub fn invert_flow(state: &LagrangianState, x: f64, grid: &RadialGrid) -> Result<f64> {
    check_monotone(state, grid)?;
    let big_r = boundary_radius(state, grid)?;
    if !(x >= 0.0 && x <= big_r) {
        return Err(Error::Range { value: x, lo: 0.0, hi: big_r });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let eta = &state.eta;
    let r = grid.nodes();
    let k = eta.partition_point(|e| *e <= x);
    let (mut lo, mut hi) = (if k == 0 { 0.0 } else { r[k - 1] }, if k == eta.len() { 1.0 } else { r[k] });
    let mut t = if k == 0 { x / eta[0] * r[0] } else { 0.5 * (lo + hi) };
    t = t.clamp(lo, hi);
    let mut best = (f64::INFINITY, t);
    for _ in 0..200 {
        let (e, de) = grid.interpolate_with_derivative(eta, t);
        let res = e - x;
        if res.abs() < best.0 {
            best = (res.abs(), t);
        }
        if res.abs() <= 4.0 * f64::EPSILON * x.max(1.0) || hi - lo <= f64::EPSILON * hi.max(1e-300) {
            break;
        }
        if res > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - res / de;
        t = if de > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    if best.0 > INVERSION_TOL * x.max(1.0) {
        return Err(Error::Numerical(format!("flow inversion stalled at residual {}", best.0)));
    }
    Ok(best.1)
}

/// Eulerian density and velocity at given radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianSnapshot {
    pub t: f64,
    /// Boundary radius `R(t)`.
    pub r_t: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

/// `ρ(t, x) = ϱ(t, η_*(x))`, `u(t, x) = U(t, η_*(x))`.
pub fn eulerian_fields(
    state: &LagrangianState,
    fields: &InitialFields,
    x_samples: &[f64],
    grid: &RadialGrid,
) -> Result<EulerianSnapshot> {
    let rho_l = density_from_flow(state, &fields.rho0, grid)?;
    let mut rho = Vec::with_capacity(x_samples.len());
    let mut u = Vec::with_capacity(x_samples.len());
    for &x in x_samples {
        let r = invert_flow(state, x, grid)?;
        rho.push(grid.interpolate(&rho_l, r).max(0.0));
        u.push(grid.interpolate(&state.u, r));
    }
    Ok(EulerianSnapshot { t: state.t, r_t: boundary_radius(state, grid)?, x: x_samples.to_vec(), rho, u })
}

/// `∫₀^{R(t)} x^m ρ(t, x) dx` on the grid's quadrature mapped to `(0, R(t))`.
pub fn eulerian_mass(state: &LagrangianState, fields: &InitialFields, grid: &RadialGrid) -> Result<f64> {
    let big_r = boundary_radius(state, grid)?;
    let xs: Vec<f64> = grid.nodes().iter().map(|r| r * big_r).collect();
    let snap = eulerian_fields(state, fields, &xs, grid)?;
    let m = grid.m() as i32;
    Ok(grid.weights().iter().zip(&xs).zip(&snap.rho).map(|((w, x), p)| big_r * w * x.powi(m) * p).sum())
}

/// Highest derivative order supported by [`radial_md_norms`].
pub const MAX_NORM_ORDER: usize = 4;

/// `|S^{n−1}|`: `2π` for `n = 2`, `4π` for `n = 3`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * core::f64::consts::PI,
        3 => 4.0 * core::f64::consts::PI,
        _ => f64::NAN,
    }
}

/// Both sides of a norm equivalence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPair {
    /// Sum of the radial-side norms `‖(η^mη_r)^{1/q} h‖_{L^q}` over the
    /// equivalent quantities `h` of the given order.
    pub radial: f64,
    /// `‖∇^k g‖_{L^q(B)}` per unit solid angle, i.e. divided by
    /// `|S^{n−1}|^{1/q}`. Only available at the identity flow.
    pub multi_d: Option<f64>,
}

/// A monomial `c·H^{(j)}(s)·y^e` with `s = |y|²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    j: usize,
    e: [u8; 3],
    c: f64,
}

/// `∂_i` of `H^{(j)}(s)y^e`: `H^{(j+1)}y_i y^e + e_i H^{(j)} y^{e−1_i}`.
fn d_terms(terms: &[Term], i: usize) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::with_capacity(2 * terms.len());
    let mut push = |t: Term| {
        if let Some(o) = out.iter_mut().find(|o| o.j == t.j && o.e == t.e) {
            o.c += t.c;
        } else {
            out.push(t);
        }
    };
    for t in terms {
        let mut e = t.e;
        e[i] += 1;
        push(Term { j: t.j + 1, e, c: t.c });
        if t.e[i] > 0 {
            let mut e = t.e;
            e[i] -= 1;
            push(Term { j: t.j, e, c: t.c * t.e[i] as f64 });
        }
    }
    out.retain(|t| t.c != 0.0);
    out
}

/// For `g_c = H(s) y_c` with `H = f/r`, every component of `∇^k g`
/// evaluated on the ray `y = (r, 0, …)` as a list of `(j, power of r, coefficient)`.
fn gradient_table(n: usize, k: usize) -> Vec<Vec<(usize, i32, f64)>> {
    let mut table = Vec::new();
    let tuples = n.pow(k as u32);
    for c in 0..n {
        for code in 0..tuples {
            let mut e = [0u8; 3];
            e[c] = 1;
            let mut terms = vec![Term { j: 0, e, c: 1.0 }];
            let mut rest = code;
            for _ in 0..k {
                terms = d_terms(&terms, rest % n);
                rest /= n;
            }
            table
                .push(terms.iter().filter(|t| t.e[1] == 0 && t.e[2] == 0).map(|t| (t.j, t.e[0] as i32, t.c)).collect());
        }
    }
    table
}

fn nodal_jets(f: &[f64], order: usize, grid: &RadialGrid) -> Result<Vec<Vec<f64>>> {
    let mut d = vec![f.to_vec()];
    for k in 1..=order {
        d.push(grid.differentiate(&d[k - 1])?);
    }
    Ok(d)
}

fn at(jets: &[Vec<f64>], i: usize) -> Vec<f64> {
    jets.iter().map(|d| d[i]).collect()
}

/// Radial and (at the identity flow) multi-dimensional norms of order `order`
/// of the radial vector field with profile `f`.
///
/// The radial side follows the transformation rules for radial vector
/// fields: order 0 uses `f`; orders 1 and 2 use `D^k f` and `D^{k−1}(f/η)`;
/// orders 3 and 4 add `D^{k−3}((1/η)D(f/η))`. The multi-dimensional side uses
/// the exact Frobenius modulus of `∇^k g`, obtained by differentiating
/// `H(|y|²/2) y_c` with `H = f/r`.
pub fn radial_md_norms(
    f: &[f64],
    q: f64,
    order: usize,
    state: &LagrangianState,
    grid: &RadialGrid,
) -> Result<NormPair> {
    if order > MAX_NORM_ORDER {
        return Err(Error::config(format!("norm order {order} above {MAX_NORM_ORDER}")));
    }
    if !(q >= 1.0) {
        return Err(Error::config("norm exponent q must be at least 1"));
    }
    check_len(grid.len(), f.len())?;
    check_monotone(state, grid)?;
    let n = state.params.n;
    let fj = nodal_jets(f, order, grid)?;
    let mut ej = vec![state.eta.clone(), state.eta_r.clone()];
    for k in 2..=order {
        ej.push(grid.differentiate(&ej[k - 1])?);
    }
    ej.truncate(order + 1);
    let jac = state.jacobian();

    let n_items = match order {
        0 => 1,
        1 | 2 => 2,
        _ => 3,
    };
    let mut items = vec![vec![0.0; grid.len()]; n_items];
    for i in 0..grid.len() {
        let fv = at(&fj, i);
        let e = at(&ej, i);
        if order == 0 {
            items[0][i] = fv[0];
            continue;
        }
        let inv_er = jet_recip(&e[1..]);
        let inv_e = jet_recip(&e);
        let mut dk = fv.clone();
        for _ in 0..order {
            dk = jet_d(&dk, &inv_er);
        }
        items[0][i] = dk[0];
        let mut fe = jet_mul(&fv, &inv_e);
        for _ in 0..order - 1 {
            fe = jet_d(&fe, &inv_er);
        }
        items[1][i] = fe[0];
        if order >= 3 {
            let dfe = jet_d(&jet_mul(&fv, &inv_e), &inv_er);
            let mut h = jet_mul(&inv_e, &dfe);
            for _ in 0..order - 3 {
                h = jet_d(&h, &inv_er);
            }
            items[2][i] = h[0];
        }
    }
    let mut radial = 0.0;
    for it in &items {
        radial += grid.weighted_lp_norm(it, &jac, q)?;
    }

    let identity = state
        .eta
        .iter()
        .zip(grid.nodes())
        .zip(&state.eta_r)
        .all(|((e, r), er)| (e - r).abs() <= 1e-14 * r.max(1.0) && (er - 1.0).abs() <= 1e-14);
    let multi_d = if identity && (n == 2 || n == 3) {
        let table = gradient_table(n, order);
        let mut modulus = vec![0.0; grid.len()];
        for (i, &r) in grid.nodes().iter().enumerate() {
            // H_j = ((1/r)∂_r)^j (f/r)
            let mut rj = vec![0.0; order + 1];
            rj[0] = r;
            if order > 0 {
                rj[1] = 1.0;
            }
            let inv_r = jet_recip(&rj);
            let mut h = jet_mul(&at(&fj, i), &inv_r);
            let mut hs = vec![h[0]];
            for _ in 0..order {
                h = jet_mul(&h[1..], &inv_r);
                hs.push(h[0]);
            }
            let s: f64 = table
                .iter()
                .map(|terms| {
                    let v: f64 = terms.iter().map(|&(j, p, c)| c * hs[j] * r.powi(p)).sum();
                    v * v
                })
                .sum();
            modulus[i] = s.sqrt();
        }
        Some(grid.weighted_lp_norm(&modulus, &grid.r_pow_m(), q)?)
    } else {
        None
    };
    Ok(NormPair { radial, multi_d })
}
