//! Composite Gauss–Legendre grids on the unit interval.
//!
//! Every nodal field in the crate lives on a [`RadialGrid`]: `panels` equal
//! sub-intervals of `(0, 1)`, each carrying `nodes_per_panel` Gauss–Legendre
//! points. Endpoints are never nodes, so the coordinate singularity at the
//! origin and the vacuum boundary at `r = 1` are only reached through
//! extrapolation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Default order of the nodal differentiation stencils.
pub const DEFAULT_STENCIL_ORDER: usize = 4;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Finite-difference weights for the first derivative at `z` from the
/// sample points `xs` (Fornberg's recursion).
pub(crate) fn first_derivative_weights(z: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][k]: weight of xs[j] for derivative k (k = 0, 1)
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// Serializable description of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub m: usize,
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub stencil_order: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.m, self.panels, self.nodes_per_panel, self.stencil_order)
    }
}

#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    weights: Vec<f64>,
}

/// Quadrature nodes and weights on `(0, 1)` with per-panel differentiation
/// stencils.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    spec: GridSpec,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Reference Gauss–Legendre nodes on [-1, 1].
    reference: Vec<f64>,
    /// Barycentric weights of the reference nodes.
    barycentric: Vec<f64>,
    stencils: Vec<Stencil>,
}

impl RadialGrid {
    pub fn new(m: usize, panels: usize, nodes_per_panel: usize, stencil_order: usize) -> Result<Self> {
        if !(1..=2).contains(&m) {
            return Err(Error::config("dimension index m must be 1 or 2"));
        }
        if panels == 0 {
            return Err(Error::config("panel count must be positive"));
        }
        if nodes_per_panel < 2 {
            return Err(Error::config("nodes_per_panel must be at least 2"));
        }
        if stencil_order == 0 {
            return Err(Error::config("stencil order must be positive"));
        }
        let (reference, ref_weights) = gauss_legendre(nodes_per_panel);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
        let mut weights = Vec::with_capacity(panels * nodes_per_panel);
        for p in 0..panels {
            let a = p as f64 * h;
            for (x, w) in reference.iter().zip(&ref_weights) {
                nodes.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }

        let barycentric = (0..nodes_per_panel)
            .map(|l| {
                let prod: f64 = (0..nodes_per_panel).filter(|&k| k != l).map(|k| reference[l] - reference[k]).product();
                1.0 / prod
            })
            .collect();

        let width = (stencil_order + 1).min(nodes_per_panel);
        let mut stencils = Vec::with_capacity(nodes.len());
        for p in 0..panels {
            let base = p * nodes_per_panel;
            for l in 0..nodes_per_panel {
                let first = l.saturating_sub(width / 2).min(nodes_per_panel - width);
                let xs = &nodes[base + first..base + first + width];
                stencils.push(Stencil { start: base + first, weights: first_derivative_weights(nodes[base + l], xs) });
            }
        }

        Ok(Self {
            spec: GridSpec { m, panels, nodes_per_panel, stencil_order },
            nodes,
            weights,
            reference,
            barycentric,
            stencils,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.spec.nodes_per_panel - 1
    }

    /// `r^m` at every node.
    pub fn r_pow_m(&self) -> Vec<f64> {
        let m = self.spec.m as i32;
        self.nodes.iter().map(|r| r.powi(m)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// Quadrature of a nodal field over `(0, 1)`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Quadrature of the pointwise product of two nodal fields.
    pub fn integrate_product(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| w * a * b).sum()
    }

    /// Nodal approximation of `f_r`. The stencil acts on `f − f(r_i)`, so
    /// constants differentiate to exactly zero.
    pub fn differentiate(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), f.len())?;
        Ok(self
            .stencils
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.weights.iter().zip(&f[s.start..s.start + s.weights.len()]).map(|(w, v)| w * (v - f[i])).sum()
            })
            .collect())
    }

    /// `(∫ weight |f|^p dr)^{1/p}`; for `p = ∞` the maximum of `|f|` over the
    /// nodes where the weight is positive.
    pub fn weighted_lp_norm(&self, f: &[f64], weight: &[f64], p: f64) -> Result<f64> {
        check_len(self.len(), f.len())?;
        check_len(self.len(), weight.len())?;
        if weight.iter().any(|w| *w < 0.0 || w.is_nan()) {
            return Err(Error::domain("negative weight in weighted norm"));
        }
        if p.is_nan() || p < 1.0 {
            return Err(Error::domain("norm exponent must be >= 1"));
        }
        if p.is_infinite() {
            return Ok(f.iter().zip(weight).filter(|(_, w)| **w > 0.0).fold(0.0, |acc, (v, _)| acc.max(v.abs())));
        }
        let s: f64 = self.weights.iter().zip(f.iter().zip(weight)).map(|(q, (v, w))| q * w * v.abs().powf(p)).sum();
        Ok(s.powf(1.0 / p))
    }

    fn panel_of(&self, r: f64) -> usize {
        let p = (r * self.spec.panels as f64).floor();
        if p < 0.0 {
            0
        } else {
            (p as usize).min(self.spec.panels - 1)
        }
    }

    /// Evaluates the panel interpolant of a nodal field at `r ∈ [0, 1]`.
    ///
    /// Inside the first and last panel this extrapolates to the endpoints.
    pub fn interpolate(&self, f: &[f64], r: f64) -> f64 {
        self.interpolate_with_derivative(f, r).0
    }

    /// Panel interpolant and its derivative at `r`.
    pub fn interpolate_with_derivative(&self, f: &[f64], r: f64) -> (f64, f64) {
        let npp = self.spec.nodes_per_panel;
        let p = self.panel_of(r);
        let h = 1.0 / self.spec.panels as f64;
        let x = 2.0 * (r - p as f64 * h) / h - 1.0;
        let vals = &f[p * npp..(p + 1) * npp];
        if let Some(l) = self.reference.iter().position(|&xl| xl == x) {
            // exactly on a node: derivative from the stencil
            let s = &self.stencils[p * npp + l];
            let d = s.weights.iter().zip(&f[s.start..s.start + s.weights.len()]).map(|(w, v)| w * v).sum();
            return (vals[l], d);
        }
        // Barycentric form of the interpolant and its derivative.
        let mut num = 0.0;
        let mut den = 0.0;
        let mut dnum = 0.0;
        let mut dden = 0.0;
        for l in 0..npp {
            let dx = x - self.reference[l];
            let c = self.barycentric[l] / dx;
            num += c * vals[l];
            den += c;
            dnum -= c / dx * vals[l];
            dden -= c / dx;
        }
        let value = num / den;
        let dvalue = (dnum - value * dden) / den;
        (value, dvalue * 2.0 / h)
    }

    /// `∫_{r_i}^1 f dr` at every node, integrating the panel interpolant.
    pub fn integrate_from_right(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), f.len())?;
        let npp = self.spec.nodes_per_panel;
        let h = 1.0 / self.spec.panels as f64;
        let (gx, gw) = gauss_legendre(npp);
        let mut out = vec![0.0; self.len()];
        let mut tail = 0.0;
        for p in (0..self.spec.panels).rev() {
            let a = p as f64 * h;
            let vals = &f[p * npp..(p + 1) * npp];
            let total: f64 = self.weights[p * npp..(p + 1) * npp].iter().zip(vals).map(|(w, v)| w * v).sum();
            for l in 0..npp {
                let ri = self.nodes[p * npp + l];
                // ∫_a^{ri} of the interpolant by an exact Gauss rule
                let half = 0.5 * (ri - a);
                let partial: f64 = gx
                    .iter()
                    .zip(&gw)
                    .map(|(x, w)| {
                        let y = a + half * (x + 1.0);
                        w * half * self.interpolate(f, y.min(a + h))
                    })
                    .sum();
                out[p * npp + l] = tail + total - partial;
            }
            tail += total;
        }
        Ok(out)
    }

    /// Quadratic extrapolation to `r = 1` from the three outermost nodes.
    pub fn extrapolate_right_quadratic(&self, f: &[f64]) -> f64 {
        let n = self.len();
        if n < 3 {
            return f[n - 1];
        }
        let xs = [self.nodes[n - 3], self.nodes[n - 2], self.nodes[n - 1]];
        let ys = [f[n - 3], f[n - 2], f[n - 1]];
        let mut value = 0.0;
        for i in 0..3 {
            let mut l = 1.0;
            for j in 0..3 {
                if i != j {
                    l *= (1.0 - xs[j]) / (xs[i] - xs[j]);
                }
            }
            value += l * ys[i];
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize, panels: usize, npp: usize) -> RadialGrid {
        RadialGrid::new(m, panels, npp, DEFAULT_STENCIL_ORDER).unwrap()
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(RadialGrid::new(0, 4, 4, 4).is_err());
        assert!(RadialGrid::new(3, 4, 4, 4).is_err());
        assert!(RadialGrid::new(1, 0, 4, 4).is_err());
        assert!(RadialGrid::new(1, 4, 1, 4).is_err());
    }

    #[test]
    fn single_panel_integrates_r_exactly() {
        let g = grid(1, 1, 4);
        assert_eq!(g.len(), 4);
        assert!(g.nodes().iter().all(|&r| r > 0.0 && r < 1.0));
        let r = g.sample(|r| r);
        assert!((g.integrate(&r) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn composite_rules() {
        let g = grid(2, 8, 8);
        assert!((g.integrate(&g.sample(|r| r * r)) - 1.0 / 3.0).abs() <= 1e-14);
        assert!((g.integrate(&g.sample(|_| 1.0)) - 1.0).abs() <= 1e-14);
        let g = grid(1, 16, 6);
        let f = g.sample(|r| r * (1.0 - r * r));
        assert!((g.integrate(&f) - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn nodes_ascending_with_positive_weights() {
        let g = grid(1, 5, 7);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn weighted_norms() {
        let g = grid(1, 16, 8);
        let one = g.sample(|_| 1.0);
        let r = g.sample(|r| r);
        let v = g.weighted_lp_norm(&one, &r, 2.0).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
        let zero = vec![0.0; g.len()];
        assert_eq!(g.weighted_lp_norm(&zero, &r, 2.0).unwrap(), 0.0);
        let w = g.sample(|r| r * (1.0 - r * r));
        let v = g.weighted_lp_norm(&r, &w, 2.0).unwrap();
        assert!((v - (1.0f64 / 12.0).sqrt()).abs() < 1e-14);
        let neg = g.sample(|r| r - 0.5);
        assert!(matches!(g.weighted_lp_norm(&one, &neg, 2.0), Err(Error::Domain(_))));
        let sup = g.weighted_lp_norm(&r, &one, f64::INFINITY).unwrap();
        assert_eq!(sup, *g.nodes().last().unwrap());
    }

    #[test]
    fn differentiation_reproduces_polynomials() {
        let g = grid(1, 8, 8);
        let c = g.differentiate(&g.sample(|_| 3.0)).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-11));
        let d = g.differentiate(&g.sample(|r| r * r)).unwrap();
        for (r, v) in g.nodes().iter().zip(&d) {
            assert!((v - 2.0 * r).abs() < 1e-12);
        }
        assert!(g.differentiate(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn differentiation_converges_at_stencil_order() {
        let err = |panels| {
            let g = grid(1, panels, 8);
            let d = g.differentiate(&g.sample(|r| (PI * r).sin())).unwrap();
            g.nodes().iter().zip(&d).map(|(r, v)| (v - PI * (PI * r).cos()).abs()).fold(0.0, f64::max)
        };
        let e1 = err(4);
        let e2 = err(8);
        let e3 = err(16);
        // fourth order: halving h divides the error by ~16
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
        assert!(e2 / e3 > 12.0, "{e2} {e3}");
    }

    #[test]
    fn interpolation_and_extrapolation() {
        let g = grid(1, 4, 6);
        let f = g.sample(|r| r * r * r - r);
        for &x in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            let (v, d) = g.interpolate_with_derivative(&f, x);
            assert!((v - (x * x * x - x)).abs() < 1e-13);
            assert!((d - (3.0 * x * x - 1.0)).abs() < 1e-11);
        }
        let q = g.sample(|r| 1.0 - r * r);
        assert!(g.extrapolate_right_quadratic(&q).abs() < 1e-13);
    }

    #[test]
    fn integrate_from_right_matches_antiderivative() {
        let g = grid(1, 8, 6);
        let f = g.sample(|r| 1.0 - r * r);
        let tail = g.integrate_from_right(&f).unwrap();
        for (r, v) in g.nodes().iter().zip(&tail) {
            let exact = (1.0 - r) - (1.0 - r * r * r) / 3.0;
            assert!((v - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn legendre_rule_exactness() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }
}
