//! Galerkin system for the momentum equation linearized about a given flow
//! map.
//!
//! With `s = r^m ρ0`, background Jacobian `J̄ = η̄^m η̄_r` and pressure
//! `P̄ = A s^γ J̄^{1−γ}`, the weak form against `ξ_k` reads
//! `𝔄 μ̇ + 𝔅(t) μ = 𝔠(t)` with
//!
//! - `𝔄_kj = ∫ s ξ_k ξ_j`
//! - `𝔅_kj = 2μ ∫ s (ξ_k' ξ_j'/η̄_r² + m ξ_k ξ_j/η̄²)`
//! - `𝔠_j = ∫ P̄ (ξ_j'/η̄_r + m ξ_j/η̄)`
//!
//! and is stepped with the implicit midpoint rule.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenBasis;
use crate::error::{check_len, Error, Result};
use crate::grid::RadialGrid;
use crate::initial::{InitialFields, PhysicalParams};
use crate::lagrangian::LagrangianState;

/// Default admissible interval for `η̄_r` and `η̄/r`.
pub const DEFAULT_SAFETY: (f64, f64) = (0.4, 1.6);

/// Background flow map `(η̄, η̄_r)` at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundFlow {
    pub eta: Vec<f64>,
    pub eta_r: Vec<f64>,
    pub u: Vec<f64>,
}

impl BackgroundFlow {
    pub fn identity(grid: &RadialGrid) -> Self {
        Self { eta: grid.nodes().to_vec(), eta_r: alloc::vec![1.0; grid.len()], u: alloc::vec![0.0; grid.len()] }
    }

    pub fn from_state(state: &LagrangianState) -> Self {
        Self { eta: state.eta.clone(), eta_r: state.eta_r.clone(), u: state.u.clone() }
    }

    /// Pointwise average of two levels.
    pub fn midpoint(a: &Self, b: &Self) -> Self {
        let avg = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| 0.5 * (x + y)).collect();
        Self { eta: avg(&a.eta, &b.eta), eta_r: avg(&a.eta_r, &b.eta_r), u: avg(&a.u, &b.u) }
    }

    /// Extremes of `η̄_r` and `η̄/r`.
    pub fn extremes(&self, grid: &RadialGrid) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for ((e, er), r) in self.eta.iter().zip(&self.eta_r).zip(grid.nodes()) {
            for v in [*er, e / r] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    fn check(&self, grid: &RadialGrid, bounds: (f64, f64), t: f64) -> Result<()> {
        check_len(grid.len(), self.eta.len())?;
        check_len(grid.len(), self.eta_r.len())?;
        let (lo, hi) = self.extremes(grid);
        if !(lo >= bounds.0 && hi <= bounds.1) {
            return Err(Error::degeneracy(
                t,
                format!("background (eta_r, eta/r) range [{lo}, {hi}] left [{}, {}]", bounds.0, bounds.1),
            ));
        }
        Ok(())
    }
}

/// Source term of manufactured problems, in weak density form `J·F`: its
/// projection `∫ G ξ_j` is added to `𝔠`.
pub trait BodyForce {
    fn weak_density(&self, t: f64, grid: &RadialGrid) -> Vec<f64>;
}

/// Mode samples as matrices, `nodes × N`.
#[derive(Debug, Clone)]
struct ModeMatrices {
    xi: DMatrix<f64>,
    xi_r: DMatrix<f64>,
}

impl ModeMatrices {
    fn new(basis: &EigenBasis) -> Self {
        let nodes = basis.nodes();
        let n = basis.len();
        Self {
            xi: DMatrix::from_fn(nodes, n, |i, j| basis.xi[j][i]),
            xi_r: DMatrix::from_fn(nodes, n, |i, j| basis.xi_r[j][i]),
        }
    }
}

/// `Xᵀ diag(d) X`
fn weighted_gram(x: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut scaled = x.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= d[i];
    }
    let g = x.transpose() * scaled;
    (&g + g.transpose()) * 0.5
}

/// `Xᵀ d`
fn weighted_projection(x: &DMatrix<f64>, d: &[f64]) -> DVector<f64> {
    x.transpose() * DVector::from_column_slice(d)
}

/// `𝔄_kj = ∫ r^m ρ0 ξ_k ξ_j`.
pub fn assemble_mass(basis: &EigenBasis, rho0: &[f64], grid: &RadialGrid) -> Result<DMatrix<f64>> {
    check_len(grid.len(), rho0.len())?;
    check_len(grid.len(), basis.nodes())?;
    let modes = ModeMatrices::new(basis);
    let d: Vec<f64> = mass_density(rho0, grid);
    let a = weighted_gram(&modes.xi, &d);
    if a.clone().cholesky().is_none() {
        return Err(Error::degeneracy(0.0, "Gram matrix is not positive definite"));
    }
    Ok(a)
}

fn mass_density(rho0: &[f64], grid: &RadialGrid) -> Vec<f64> {
    grid.weights().iter().zip(grid.r_pow_m()).zip(rho0).map(|((w, rm), p)| w * rm * p).collect()
}

/// `𝔅(t)` for the background `bg`.
pub fn assemble_stiffness(
    basis: &EigenBasis,
    rho0: &[f64],
    bg: &BackgroundFlow,
    params: &PhysicalParams,
    grid: &RadialGrid,
) -> Result<DMatrix<f64>> {
    check_len(grid.len(), rho0.len())?;
    bg.check(grid, DEFAULT_SAFETY, f64::NAN)?;
    let modes = ModeMatrices::new(basis);
    Ok(stiffness(&modes, &mass_density(rho0, grid), bg, params))
}

fn stiffness(modes: &ModeMatrices, ws: &[f64], bg: &BackgroundFlow, params: &PhysicalParams) -> DMatrix<f64> {
    let mf = params.m() as f64;
    let c = 2.0 * params.mu;
    let d1: Vec<f64> = ws.iter().zip(&bg.eta_r).map(|(w, er)| c * w / (er * er)).collect();
    let d0: Vec<f64> = ws.iter().zip(&bg.eta).map(|(w, e)| c * mf * w / (e * e)).collect();
    weighted_gram(&modes.xi_r, &d1) + weighted_gram(&modes.xi, &d0)
}

/// `𝔠(t)` for the background `bg`.
pub fn assemble_forcing(
    basis: &EigenBasis,
    rho0: &[f64],
    bg: &BackgroundFlow,
    params: &PhysicalParams,
    grid: &RadialGrid,
) -> Result<DVector<f64>> {
    check_len(grid.len(), rho0.len())?;
    bg.check(grid, DEFAULT_SAFETY, f64::NAN)?;
    let modes = ModeMatrices::new(basis);
    Ok(pressure_forcing(&modes, rho0, bg, params, grid))
}

fn pressure_forcing(
    modes: &ModeMatrices,
    rho0: &[f64],
    bg: &BackgroundFlow,
    params: &PhysicalParams,
    grid: &RadialGrid,
) -> DVector<f64> {
    let n = modes.xi.ncols();
    if params.a == 0.0 {
        return DVector::zeros(n);
    }
    let m = params.m() as i32;
    let mf = m as f64;
    let g = params.gamma;
    let mut d1 = Vec::with_capacity(grid.len());
    let mut d0 = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let r = grid.nodes()[i];
        let s = r.powi(m) * rho0[i];
        let jac = bg.eta[i].powi(m) * bg.eta_r[i];
        let p = params.a * s.powf(g) * jac.powf(1.0 - g) * grid.weights()[i];
        d1.push(p / bg.eta_r[i]);
        d0.push(mf * p / bg.eta[i]);
    }
    weighted_projection(&modes.xi_r, &d1) + weighted_projection(&modes.xi, &d0)
}

/// Galerkin system with a factorized mass matrix.
#[derive(Debug, Clone)]
pub struct GalerkinSystem<'a> {
    pub basis: &'a EigenBasis,
    pub grid: &'a RadialGrid,
    pub params: PhysicalParams,
    rho0: Vec<f64>,
    ws: Vec<f64>,
    modes: ModeMatrices,
    mass: DMatrix<f64>,
    mass_chol: Cholesky<f64, Dyn>,
    /// Admissible interval for `η̄_r` and `η̄/r`.
    pub safety: (f64, f64),
}

impl<'a> GalerkinSystem<'a> {
    pub fn new(fields: &InitialFields, basis: &'a EigenBasis, grid: &'a RadialGrid) -> Result<Self> {
        let mass = assemble_mass(basis, &fields.rho0, grid)?;
        let mass_chol =
            mass.clone().cholesky().ok_or_else(|| Error::degeneracy(0.0, "Gram matrix is not positive definite"))?;
        Ok(Self {
            basis,
            grid,
            params: fields.params,
            rho0: fields.rho0.clone(),
            ws: mass_density(&fields.rho0, grid),
            modes: ModeMatrices::new(basis),
            mass,
            mass_chol,
            safety: DEFAULT_SAFETY,
        })
    }

    pub fn with_safety(mut self, lo: f64, hi: f64) -> Self {
        self.safety = (lo, hi);
        self
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn stiffness(&self, bg: &BackgroundFlow) -> DMatrix<f64> {
        stiffness(&self.modes, &self.ws, bg, &self.params)
    }

    pub fn forcing(&self, bg: &BackgroundFlow) -> DVector<f64> {
        pressure_forcing(&self.modes, &self.rho0, bg, &self.params, self.grid)
    }

    /// `∫ G ξ_j` for a weak-density source `G`.
    pub fn project_source(&self, g: &[f64]) -> DVector<f64> {
        let d: Vec<f64> = g.iter().zip(self.grid.weights()).map(|(g, w)| g * w).collect();
        weighted_projection(&self.modes.xi, &d)
    }

    /// `𝔄`-norm `(μᵀ𝔄μ)^{1/2}`.
    pub fn mass_norm(&self, coeffs: &[f64]) -> f64 {
        let v = DVector::from_column_slice(coeffs);
        (v.dot(&(&self.mass * &v))).max(0.0).sqrt()
    }

    /// One implicit midpoint step with the matrices of `bg_mid`:
    /// `(𝔄 + dt/2 𝔅) μ⁺ = (𝔄 − dt/2 𝔅) μ + dt 𝔠`.
    pub fn step_linear(
        &self,
        coeffs: &[f64],
        bg_mid: &BackgroundFlow,
        dt: f64,
        t_mid: f64,
        source: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        check_len(self.len(), coeffs.len())?;
        if !(dt > 0.0) {
            return Err(Error::domain("time step must be positive"));
        }
        bg_mid.check(self.grid, self.safety, t_mid)?;
        let b = self.stiffness(bg_mid);
        let mut c = self.forcing(bg_mid);
        if let Some(g) = source {
            check_len(self.grid.len(), g.len())?;
            c += self.project_source(g);
        }
        self.step_with(coeffs, &b, &c, dt)
    }

    /// Midpoint step with explicitly supplied `𝔅` and `𝔠`.
    pub fn step_with(&self, coeffs: &[f64], b: &DMatrix<f64>, c: &DVector<f64>, dt: f64) -> Result<Vec<f64>> {
        let mu = DVector::from_column_slice(coeffs);
        let half = 0.5 * dt;
        let lhs = &self.mass + b * half;
        let rhs = &self.mass * &mu - (b * &mu) * half + c * dt;
        let chol = lhs
            .cholesky()
            .ok_or_else(|| Error::Numerical("implicit midpoint matrix is not positive definite".into()))?;
        Ok(chol.solve(&rhs).iter().copied().collect())
    }

    /// `𝔄⁻¹ v`.
    pub fn solve_mass(&self, v: &DVector<f64>) -> DVector<f64> {
        self.mass_chol.solve(v)
    }

    /// Runs the linear problem over the supplied background levels
    /// `t0 + n·dt`, `n = 0..backgrounds.len()`. Returns the coefficient
    /// history including the initial vector.
    pub fn run(
        &self,
        coeffs0: &[f64],
        t0: f64,
        dt: f64,
        backgrounds: &[BackgroundFlow],
        source: Option<&dyn BodyForce>,
    ) -> Result<Vec<Vec<f64>>> {
        let mut history = Vec::with_capacity(backgrounds.len());
        history.push(coeffs0.to_vec());
        for n in 0..backgrounds.len().saturating_sub(1) {
            let t_mid = t0 + (n as f64 + 0.5) * dt;
            let mid = BackgroundFlow::midpoint(&backgrounds[n], &backgrounds[n + 1]);
            let g = source.map(|s| s.weak_density(t_mid, self.grid));
            let next = self.step_linear(&history[n], &mid, dt, t_mid, g.as_deref())?;
            history.push(next);
        }
        Ok(history)
    }

    /// Nodal `(U, U_r)` for a coefficient vector.
    pub fn nodal(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = DVector::from_column_slice(coeffs);
        let u = &self.modes.xi * &c;
        let ur = &self.modes.xi_r * &c;
        (u.iter().copied().collect(), ur.iter().copied().collect())
    }
}

/// Solves the linear problem over `[0, T]` from `project(u0)` against a
/// background given at the levels `n·dt`. The returned states carry the
/// background flow map.
pub fn solve_linearized(
    fields: &InitialFields,
    backgrounds: &[BackgroundFlow],
    basis: &EigenBasis,
    grid: &RadialGrid,
    dt: f64,
    horizon: f64,
) -> Result<Vec<LagrangianState>> {
    let steps = step_count(horizon, dt)?;
    if backgrounds.len() < steps + 1 {
        return Err(Error::Shape { expected: steps + 1, got: backgrounds.len() });
    }
    let system = GalerkinSystem::new(fields, basis, grid)?;
    let c0 = basis.project(&fields.u0, grid)?;
    let history = system.run(&c0, 0.0, dt, &backgrounds[..=steps], None)?;
    Ok(history
        .into_iter()
        .enumerate()
        .map(|(n, c)| {
            let (u, u_r) = system.nodal(&c);
            LagrangianState {
                t: n as f64 * dt,
                u,
                u_r,
                eta: backgrounds[n].eta.clone(),
                eta_r: backgrounds[n].eta_r.clone(),
                params: fields.params,
                modal_u: Some(c),
            }
        })
        .collect())
}

/// Number of steps of size `dt` covering `horizon`; the two must be
/// commensurate up to rounding.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(Error::config("time step and horizon must be positive"));
    }
    let n = (horizon / dt).round();
    if (n * dt - horizon).abs() > 1e-9 * horizon || n < 1.0 {
        return Err(Error::config(format!("horizon {horizon} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::solve_eigenpairs;
    use alloc::vec;

    fn setup(m: usize, n: usize) -> (RadialGrid, EigenBasis) {
        let g = RadialGrid::new(m, 16, 8, 4).unwrap();
        let b = solve_eigenpairs(m, n, &g).unwrap();
        (g, b)
    }

    fn params(m: usize, a: f64) -> PhysicalParams {
        PhysicalParams::new(m + 1, 2.0, 1.0, 0.7, a).unwrap()
    }

    fn dilated(grid: &RadialGrid, c: f64) -> BackgroundFlow {
        BackgroundFlow {
            eta: grid.nodes().iter().map(|r| c * r).collect(),
            eta_r: vec![c; grid.len()],
            u: vec![0.0; grid.len()],
        }
    }

    #[test]
    fn mass_matrix_properties() {
        let (g, b) = setup(1, 8);
        let one = vec![1.0; g.len()];
        let a = assemble_mass(&b, &one, &g).unwrap();
        assert!((a - DMatrix::identity(8, 8)).abs().max() < 1e-10);
        let rho = g.sample(|r| 1.0 - r * r);
        let a1 = assemble_mass(&b, &rho, &g).unwrap();
        let two: Vec<f64> = rho.iter().map(|v| 2.0 * v).collect();
        let a2 = assemble_mass(&b, &two, &g).unwrap();
        assert!((&a1 * 2.0 - a2).abs().max() < 1e-13);
        let eig = a1.symmetric_eigenvalues();
        assert!(eig.min() > 0.0);
        assert!(assemble_mass(&b, &vec![0.0; g.len()], &g).is_err());
    }

    #[test]
    fn stiffness_identity_background_is_diagonal() {
        for m in [1, 2] {
            let (g, b) = setup(m, 8);
            let p = params(m, 1.0);
            let one = vec![1.0; g.len()];
            let k = assemble_stiffness(&b, &one, &BackgroundFlow::identity(&g), &p, &g).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    let e = if i == j { 2.0 * p.mu * b.lambdas[i] } else { 0.0 };
                    assert!((k[(i, j)] - e).abs() < 1e-8 * b.lambdas[i].max(1.0));
                }
            }
            assert!((&k - k.transpose()).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn stiffness_scaling() {
        let (g, b) = setup(1, 6);
        let rho = g.sample(|r| 1.0 - r * r);
        let p = params(1, 1.0);
        let k = assemble_stiffness(&b, &rho, &BackgroundFlow::identity(&g), &p, &g).unwrap();
        let p2 = PhysicalParams { mu: 2.0 * p.mu, ..p };
        let k2 = assemble_stiffness(&b, &rho, &BackgroundFlow::identity(&g), &p2, &g).unwrap();
        assert!((&k * 2.0 - k2).abs().max() < 1e-10);
        let c = 1.25;
        let kc = assemble_stiffness(&b, &rho, &dilated(&g, c), &p, &g).unwrap();
        assert!((&k / (c * c) - kc).abs().max() < 1e-10);
        assert!(k.symmetric_eigenvalues().min() >= -1e-10);
        assert!(matches!(assemble_stiffness(&b, &rho, &dilated(&g, 2.0), &p, &g), Err(Error::Degeneracy { .. })));
    }

    #[test]
    fn forcing_properties() {
        let (g, b) = setup(1, 6);
        let rho = g.sample(|r| 1.0 - r * r);
        let p0 = params(1, 0.0);
        let bg = BackgroundFlow::identity(&g);
        assert!(assemble_forcing(&b, &rho, &bg, &p0, &g).unwrap().iter().all(|v| *v == 0.0));
        let p = params(1, 1.0);
        let p2 = params(1, 2.0);
        let c1 = assemble_forcing(&b, &rho, &bg, &p, &g).unwrap();
        let c2 = assemble_forcing(&b, &rho, &bg, &p2, &g).unwrap();
        assert!((c1 * 2.0 - c2).abs().max() < 1e-13);
    }

    #[test]
    fn midpoint_step_properties() {
        let (g, b) = setup(1, 6);
        let rho = g.sample(|r| 1.0 - r * r);
        let p = params(1, 0.0);
        let f = InitialFields::from_samples(p, rho, vec![0.0; g.len()], &g).unwrap();
        let sys = GalerkinSystem::new(&f, &b, &g).unwrap();
        let mu: Vec<f64> = (0..6).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let bg = BackgroundFlow::identity(&g);
        let next = sys.step_linear(&mu, &bg, 0.01, 0.005, None).unwrap();
        assert!(sys.mass_norm(&next) <= sys.mass_norm(&mu));
        // 𝔅 = 0, 𝔠 = const
        let zero = DMatrix::zeros(6, 6);
        let c = DVector::from_fn(6, |k, _| k as f64 - 2.0);
        let next = sys.step_with(&mu, &zero, &c, 0.1).unwrap();
        let expected = DVector::from_column_slice(&mu) + sys.solve_mass(&c) * 0.1;
        assert!((DVector::from_column_slice(&next) - expected).abs().max() < 1e-12);
    }

    #[test]
    fn scalar_midpoint_local_error_is_third_order() {
        // ẏ = −b y + c; exact y(dt) vs one midpoint step
        let (g, b) = setup(1, 1);
        let one = vec![1.0; g.len()];
        let f = InitialFields::from_samples(params(1, 0.0), one, vec![0.0; g.len()], &g).unwrap();
        let sys = GalerkinSystem::new(&f, &b, &g).unwrap();
        let (bb, cc, y0) = (3.0, 1.5, 2.0);
        let err = |dt: f64| {
            let y =
                sys.step_with(&[y0], &DMatrix::from_element(1, 1, bb), &DVector::from_element(1, cc), dt).unwrap()[0];
            let a = sys.mass()[(0, 0)];
            let exact = cc / bb + (y0 - cc / bb) * (-bb / a * dt).exp();
            (y - exact).abs()
        };
        let r = err(0.02) / err(0.01);
        assert!(r > 7.0 && r < 9.0, "{r}");
    }

    #[test]
    fn decoupled_mode_decays_exponentially() {
        let (g, b) = setup(1, 6);
        let p = params(1, 0.0);
        let f = InitialFields::from_samples(p, vec![1.0; g.len()], b.xi[0].clone(), &g).unwrap();
        let dt = 1e-3;
        let steps = 100;
        let bgs = vec![BackgroundFlow::identity(&g); steps + 1];
        let states = solve_linearized(&f, &bgs, &b, &g, dt, steps as f64 * dt).unwrap();
        let t = steps as f64 * dt;
        let exact = (-2.0 * p.mu * b.lambdas[0] * t).exp();
        let c = states.last().unwrap().modal_u.as_ref().unwrap();
        assert!((c[0] - exact).abs() < 1e-5 * exact, "{} {}", c[0], exact);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_data_stays_zero() {
        let (g, b) = setup(1, 6);
        let p = params(1, 0.0);
        let rho = g.sample(|r| 1.0 - r * r);
        let f = InitialFields::from_samples(p, rho, vec![0.0; g.len()], &g).unwrap();
        let bgs = vec![BackgroundFlow::identity(&g); 11];
        let states = solve_linearized(&f, &bgs, &b, &g, 0.1, 1.0).unwrap();
        assert!(states.iter().all(|s| s.u.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn step_count_checks() {
        assert_eq!(step_count(0.2, 1e-3).unwrap(), 200);
        assert!(step_count(0.2, 0.3).is_err());
        assert!(step_count(0.0, 0.1).is_err());
    }
}
