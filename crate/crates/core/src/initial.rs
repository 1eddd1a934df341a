//! Physical parameters and admissible initial data.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::cutoff::{cutoff_value, CutoffKind};
use crate::error::{check_len, Error, Result};
use crate::grid::RadialGrid;

/// `(n, γ, β, μ, A)`; the pressure law is `P = Aρ^γ`, and `ρ0^β` behaves like
/// the distance to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n: usize,
    pub gamma: f64,
    pub beta: f64,
    pub mu: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

impl PhysicalParams {
    /// Validated constructor.
    pub fn new(n: usize, gamma: f64, beta: f64, mu: f64, a: f64) -> Result<Self> {
        let p = Self { n, gamma, beta, mu, a };
        p.validate()?;
        Ok(p)
    }

    /// Two-dimensional shallow-water specialization: `γ = n = 2`.
    pub fn shallow_water(beta: f64, mu: f64, a: f64) -> Result<Self> {
        Self::new(2, 2.0, beta, mu, a)
    }

    /// Dimension index `m = n − 1`.
    pub fn m(&self) -> usize {
        self.n - 1
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gamma;
        match self.n {
            2 if g > 4.0 / 3.0 && g.is_finite() => {}
            3 if g > 4.0 / 3.0 && g < 3.0 => {}
            2 | 3 => {
                return Err(Error::config(format!("gamma outside the admissible range for n = {}: {}", self.n, g)))
            }
            _ => return Err(Error::config(format!("dimension n must be 2 or 3, got {}", self.n))),
        }
        let b = self.beta;
        if !(b > 1.0 / 3.0 && b <= g - 1.0 + 1e-12) {
            return Err(Error::config(format!("beta outside (1/3, gamma-1]: beta = {b}, gamma = {g}")));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::config("viscosity mu must be positive"));
        }
        // A = 0 (pressureless flow) is allowed as a degenerate test case.
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::config("entropy constant A must be nonnegative"));
        }
        Ok(())
    }

    /// Whether `β = γ − 1`, the balanced case of the profile condition.
    pub fn is_balanced(&self) -> bool {
        (self.beta - (self.gamma - 1.0)).abs() <= 1e-12
    }
}

/// Smooth compactly supported radial bump
/// `q·exp(−1/(1 − ((r−c)/h)²))` on `|r − c| < h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl BumpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::config("bump radius must be positive"));
        }
        // The velocity field ũ0(r)·y/r must be smooth and compactly supported
        // in the open ball, so the bump stays off both the origin and r = 1.
        if self.center - self.radius < 0.0 || self.center + self.radius > 1.0 {
            return Err(Error::config("bump support must lie inside [0, 1]"));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config("bump amplitude must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = (r - self.center) / self.radius;
        if x.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - x * x)).exp()
        }
    }
}

/// Sampled initial data together with its envelope constants
/// `K1(1−r)^{1/β} ≤ ρ0 ≤ K2(1−r)^{1/β}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialFields {
    pub params: PhysicalParams,
    pub rho0: Vec<f64>,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub k1: f64,
    pub k2: f64,
    /// `k` of the example family `ρ0 = (1 − r^{2k})^{1/β}`, if used.
    pub k_profile: Option<u32>,
}

impl InitialFields {
    /// The example family with an optional bump in the velocity.
    pub fn example(params: PhysicalParams, k: u32, bump: Option<BumpSpec>, grid: &RadialGrid) -> Result<Self> {
        params.validate()?;
        let rho0 = density_profile_example(&params, k, grid)?;
        let u0 = velocity_profile_example(&params, &rho0, bump.as_ref(), grid)?;
        let mut fields = Self {
            params,
            rho0,
            u0,
            v0: Vec::new(),
            k1: 1.0,
            k2: (2.0 * k as f64).powf(1.0 / params.beta),
            k_profile: Some(k),
        };
        fields.v0 = initial_effective_velocity(&fields, grid)?;
        Ok(fields)
    }

    /// Arbitrary sampled data. Envelope constants are the observed extremes
    /// of `ρ0/(1−r)^{1/β}`, and parameters are not validated so that test
    /// profiles outside the admissible class can be built.
    pub fn from_samples(params: PhysicalParams, rho0: Vec<f64>, u0: Vec<f64>, grid: &RadialGrid) -> Result<Self> {
        check_len(grid.len(), rho0.len())?;
        check_len(grid.len(), u0.len())?;
        let (k1, k2) = envelope_range(&params, &rho0, grid);
        let mut fields = Self { params, rho0, u0, v0: Vec::new(), k1, k2, k_profile: None };
        fields.v0 = initial_effective_velocity(&fields, grid)?;
        Ok(fields)
    }

    /// Replaces `u0` and recomputes `v0`.
    pub fn with_velocity(&self, u0: Vec<f64>, grid: &RadialGrid) -> Result<Self> {
        check_len(grid.len(), u0.len())?;
        let mut f = self.clone();
        f.u0 = u0;
        f.v0 = initial_effective_velocity(&f, grid)?;
        Ok(f)
    }

    /// Replaces the physical parameters, keeping the sampled profiles.
    pub fn with_params(&self, params: PhysicalParams, grid: &RadialGrid) -> Result<Self> {
        let mut f = self.clone();
        f.params = params;
        f.v0 = initial_effective_velocity(&f, grid)?;
        Ok(f)
    }

    /// `r^m ρ0` at the nodes, the mass weight of every Lagrangian integral.
    pub fn mass_weight(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.r_pow_m().iter().zip(&self.rho0).map(|(a, b)| a * b).collect()
    }

    /// `∫ r^m ρ0 dr`.
    pub fn mass(&self, grid: &RadialGrid) -> f64 {
        grid.integrate(&self.mass_weight(grid))
    }

    /// `ρ0^β` and its first three `r`-derivatives at the nodes: analytic for
    /// the example family, nodal otherwise.
    pub fn distance_function(&self, grid: &RadialGrid) -> Result<[Vec<f64>; 4]> {
        if let Some(k) = self.k_profile {
            let e = 2 * k as i32;
            let ef = e as f64;
            let g = grid.sample(|r| 1.0 - r.powi(e));
            let g1 = grid.sample(|r| -ef * r.powi(e - 1));
            let g2 = grid.sample(|r| -ef * (ef - 1.0) * r.powi(e - 2));
            let g3 = grid.sample(|r| if e >= 3 { -ef * (ef - 1.0) * (ef - 2.0) * r.powi(e - 3) } else { 0.0 });
            return Ok([g, g1, g2, g3]);
        }
        let g: Vec<f64> = self.rho0.iter().map(|p| p.powf(self.params.beta)).collect();
        let g1 = grid.differentiate(&g)?;
        let g2 = grid.differentiate(&g1)?;
        let g3 = grid.differentiate(&g2)?;
        Ok([g, g1, g2, g3])
    }
}

/// `ρ0 = (1 − r^{2k})^{1/β}` at the nodes.
pub fn density_profile_example(params: &PhysicalParams, k: u32, grid: &RadialGrid) -> Result<Vec<f64>> {
    if k < 1 {
        return Err(Error::config("profile index k must be at least 1"));
    }
    let e = 2 * k as i32;
    let p = 1.0 / params.beta;
    Ok(grid.sample(|r| (1.0 - r.powi(e)).powf(p)))
}

/// Example initial velocity: the bump alone, plus a pressure-balancing
/// correction `−ζ♯_{1/3}(A/2μ)∫_r^1 ρ0^{γ−1}` when `β ∈ [(2γ−1)/5, γ−1)`.
pub fn velocity_profile_example(
    params: &PhysicalParams,
    rho0: &[f64],
    bump: Option<&BumpSpec>,
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    check_len(grid.len(), rho0.len())?;
    let (b, g) = (params.beta, params.gamma);
    if !(b > 1.0 / 3.0 && b <= g - 1.0 + 1e-12) {
        return Err(Error::config(format!("beta outside (1/3, gamma-1]: beta = {b}, gamma = {g}")));
    }
    let mut u0 = match bump {
        Some(bump) => {
            bump.validate()?;
            grid.sample(|r| bump.eval(r))
        }
        None => alloc::vec![0.0; grid.len()],
    };
    let corrected = !params.is_balanced() && b >= (2.0 * g - 1.0) / 5.0;
    if corrected {
        let p: Vec<f64> = rho0.iter().map(|x| x.powf(g - 1.0)).collect();
        let tail = grid.integrate_from_right(&p)?;
        let c = params.a / (2.0 * params.mu);
        for ((u, r), t) in u0.iter_mut().zip(grid.nodes()).zip(&tail) {
            *u -= cutoff_value(CutoffKind::SmoothComplement, 1.0 / 3.0, *r) * c * t;
        }
    }
    Ok(u0)
}

/// `v0 = u0 + 2μ(log ρ0)_r = u0 + (2μ/β)(ρ0^β)_r/ρ0^β`.
pub fn initial_effective_velocity(fields: &InitialFields, grid: &RadialGrid) -> Result<Vec<f64>> {
    check_len(grid.len(), fields.rho0.len())?;
    check_len(grid.len(), fields.u0.len())?;
    if fields.rho0.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::domain("initial density must be positive at every node"));
    }
    let [g, g1, ..] = if fields.k_profile.is_some() {
        fields.distance_function(grid)?
    } else {
        // A single nodal derivative suffices here.
        let g: Vec<f64> = fields.rho0.iter().map(|p| p.powf(fields.params.beta)).collect();
        let g1 = grid.differentiate(&g)?;
        [g, g1, Vec::new(), Vec::new()]
    };
    let c = 2.0 * fields.params.mu / fields.params.beta;
    Ok(fields.u0.iter().zip(g.iter().zip(&g1)).map(|(u, (g, d))| u + c * d / g).collect())
}

fn envelope_ratios(params: &PhysicalParams, rho0: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let p = 1.0 / params.beta;
    rho0.iter().zip(grid.nodes()).map(|(rho, r)| rho / (1.0 - r).powf(p)).collect()
}

fn envelope_range(params: &PhysicalParams, rho0: &[f64], grid: &RadialGrid) -> (f64, f64) {
    let q = envelope_ratios(params, rho0, grid);
    let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Outcome of [`validate_admissibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// Observed extremes of `ρ0/(1−r)^{1/β}` over the nodes.
    pub envelope_min: f64,
    pub envelope_max: f64,
    /// Local exponent `d log(ρ0/(1−r)^{1/β}) / d log(1−r)` across the
    /// outermost panel. Near zero when the envelope holds; positive when the
    /// ratio collapses toward the boundary, negative when it blows up.
    pub boundary_exponent: f64,
    pub lower_envelope_ok: bool,
    pub upper_envelope_ok: bool,
    /// `‖r^{m/2}(g, g_r, g_rr, g_r/r, g_rrr, (g_r/r)_r)‖` with `g = ρ0^β`.
    pub distance_seminorms: [f64; 6],
    pub seminorms_ok: bool,
    /// Discrete `E(0, U)`.
    pub initial_energy: f64,
    pub energy_ok: bool,
    pub pass: bool,
}

/// Largest `|boundary_exponent|` accepted as a bounded envelope ratio.
pub const ENVELOPE_EXPONENT_SLACK: f64 = 0.25;

/// Checks the profile condition on `ρ0` and finiteness of the initial energy.
pub fn validate_admissibility(fields: &InitialFields, grid: &RadialGrid) -> AdmissibilityReport {
    let q = envelope_ratios(&fields.params, &fields.rho0, grid);
    let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = grid.len();
    let npp = grid.spec().nodes_per_panel;
    let (i0, i1) = (n - npp, n - 1);
    let (r0, r1) = (grid.nodes()[i0], grid.nodes()[i1]);
    let exponent = (q[i1].ln() - q[i0].ln()) / ((1.0 - r1).ln() - (1.0 - r0).ln());
    let finite_positive = lo.is_finite() && hi.is_finite() && lo > 1e-10;
    let exponent_ok = exponent.is_finite();
    let lower_envelope_ok = finite_positive && exponent_ok && exponent <= ENVELOPE_EXPONENT_SLACK;
    let upper_envelope_ok = finite_positive && exponent_ok && exponent >= -ENVELOPE_EXPONENT_SLACK;

    let seminorms = distance_seminorms(fields, grid).unwrap_or([f64::NAN; 6]);
    let seminorms_ok = seminorms.iter().all(|v| v.is_finite());

    let initial_energy = crate::diagnostics::initial_energy(fields, grid).unwrap_or(f64::NAN);
    let energy_ok = initial_energy.is_finite();

    AdmissibilityReport {
        envelope_min: lo,
        envelope_max: hi,
        boundary_exponent: exponent,
        lower_envelope_ok,
        upper_envelope_ok,
        distance_seminorms: seminorms,
        seminorms_ok,
        initial_energy,
        energy_ok,
        pass: lower_envelope_ok && upper_envelope_ok && seminorms_ok && energy_ok,
    }
}

fn distance_seminorms(fields: &InitialFields, grid: &RadialGrid) -> Result<[f64; 6]> {
    let [g, g1, g2, g3] = fields.distance_function(grid)?;
    let r = grid.nodes();
    let gr_over_r: Vec<f64> = g1.iter().zip(r).map(|(d, r)| d / r).collect();
    // (g_r/r)_r = g_rr/r − g_r/r²
    let d_gr_over_r: Vec<f64> = g2.iter().zip(&g1).zip(r).map(|((d2, d1), r)| d2 / r - d1 / (r * r)).collect();
    let w = grid.r_pow_m();
    let norm = |f: &[f64]| grid.weighted_lp_norm(f, &w, 2.0);
    Ok([norm(&g)?, norm(&g1)?, norm(&g2)?, norm(&gr_over_r)?, norm(&g3)?, norm(&d_gr_over_r)?])
}
