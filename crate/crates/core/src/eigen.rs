//! Sturm–Liouville eigenbasis
//! `−(r^m ξ')' + m r^{m−2} ξ = λ r^m ξ`, `ξ(0) = 0`, `ξ'(1) = 0`.
//!
//! The problem is discretized in weak form on a modal basis `φ_k = r·q_k(r)`,
//! where the `q_k` are polynomials orthonormal for the discrete weight
//! `w_i r_i^{m+2}`. The factor `r` imposes `ξ(0) = 0`; the condition at
//! `r = 1` is natural. The first `N` eigenvectors are then re-orthonormalized
//! on the grid so that the Gram matrix identities used by the Galerkin
//! solver hold to rounding.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::RadialGrid;

/// Three-term recurrence of the auxiliary orthonormal polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Recurrence {
    q0: f64,
    alpha: Vec<f64>,
    /// `beta[k]` multiplies `q_k` in the recurrence for `q_k`; `beta[0]` unused.
    beta: Vec<f64>,
}

impl Recurrence {
    fn len(&self) -> usize {
        self.alpha.len()
    }

    /// `q_k^{(d)}(x)` for `d = 0..=order` and every `k`, from the
    /// differentiated recurrence.
    fn eval_derivatives(&self, x: f64, order: usize) -> Vec<Vec<f64>> {
        let k = self.len();
        let mut q = vec![vec![0.0; k]; order + 1];
        q[0][0] = self.q0;
        for j in 0..k - 1 {
            for d in 0..=order {
                let prev = if j == 0 { 0.0 } else { q[d][j - 1] };
                let lower = if d == 0 { 0.0 } else { d as f64 * q[d - 1][j] };
                q[d][j + 1] = ((x - self.alpha[j]) * q[d][j] + lower - self.beta[j] * prev) / self.beta[j + 1];
            }
        }
        q
    }

    /// `φ_k^{(d)}(x)` for `φ_k = x q_k`, `d = 0..=order`.
    fn eval_phi(&self, x: f64, order: usize) -> Vec<Vec<f64>> {
        let q = self.eval_derivatives(x, order);
        (0..=order)
            .map(|d| (0..self.len()).map(|j| x * q[d][j] + if d > 0 { d as f64 * q[d - 1][j] } else { 0.0 }).collect())
            .collect()
    }
}

/// Discrete Stieltjes procedure for the weight `w_i r_i^{m+2}`.
fn stieltjes(grid: &RadialGrid, count: usize) -> Result<Recurrence> {
    let m = grid.m() as i32;
    let x = grid.nodes();
    let w: Vec<f64> = grid.weights().iter().zip(x).map(|(w, r)| w * r.powi(m + 2)).collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { w.iter().zip(a.iter().zip(b)).map(|(w, (a, b))| w * a * b).sum() };
    let total: f64 = w.iter().sum();
    let q0 = 1.0 / total.sqrt();
    let mut prev = vec![0.0; x.len()];
    let mut cur = vec![q0; x.len()];
    let mut alpha = Vec::with_capacity(count);
    let mut beta = vec![0.0; count];
    for k in 0..count {
        let xq: Vec<f64> = x.iter().zip(&cur).map(|(x, q)| x * q).collect();
        let a = dot(&xq, &cur);
        alpha.push(a);
        if k + 1 == count {
            break;
        }
        let mut next: Vec<f64> =
            xq.iter().zip(cur.iter().zip(&prev)).map(|(xq, (q, p))| xq - a * q - beta[k] * p).collect();
        let b = dot(&next, &next).sqrt();
        if !(b > 1e-300) {
            return Err(Error::Numerical(format!("polynomial recurrence broke down at degree {}", k + 1)));
        }
        next.iter_mut().for_each(|v| *v /= b);
        beta[k + 1] = b;
        prev = core::mem::replace(&mut cur, next);
    }
    Ok(Recurrence { q0, alpha, beta })
}

/// Eigenpairs `(λ_j, ξ_j)`, ascending and orthonormal in `L²(r^m dr)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBasis {
    pub m: usize,
    pub lambdas: Vec<f64>,
    /// `xi[j][i] = ξ_j(r_i)`
    pub xi: Vec<Vec<f64>>,
    /// `xi_r[j][i] = ξ_j'(r_i)`
    pub xi_r: Vec<Vec<f64>>,
    /// `higher[d − 2][j][i] = ξ_j^{(d)}(r_i)` for `d = 2..=4`.
    higher: Vec<Vec<Vec<f64>>>,
    recurrence: Recurrence,
    /// `coeffs[j][k]`: weight of `r·q_k` in `ξ_j`.
    coeffs: Vec<Vec<f64>>,
}

/// Highest derivative of the modes sampled on the grid.
pub const MAX_DERIVATIVE: usize = 4;

/// Size of the auxiliary polynomial space used for `n` modes on `nodes` nodes.
pub fn auxiliary_dimension(n: usize, nodes: usize) -> usize {
    (2 * n).max(n + 24).min(nodes / 2)
}

/// First `n` eigenpairs on `grid`.
pub fn solve_eigenpairs(m: usize, n: usize, grid: &RadialGrid) -> Result<EigenBasis> {
    if n == 0 {
        return Err(Error::config("mode count N must be at least 1"));
    }
    if m != grid.m() {
        return Err(Error::config(format!("eigenproblem index m = {m} does not match grid m = {}", grid.m())));
    }
    let k = auxiliary_dimension(n, grid.len());
    if k < n + 2 {
        return Err(Error::config(format!("grid with {} nodes is too coarse for {n} modes", grid.len())));
    }
    let rec = stieltjes(grid, k)?;
    let r = grid.nodes();
    let w = grid.weights();
    let mi = m as i32;
    let mf = m as f64;

    // derivatives of φ_k = r q_k at the nodes, up to fourth order
    let mut phis: Vec<DMatrix<f64>> = (0..=MAX_DERIVATIVE).map(|_| DMatrix::zeros(r.len(), k)).collect();
    for (i, &ri) in r.iter().enumerate() {
        let all = rec.eval_phi(ri, MAX_DERIVATIVE);
        for (d, row) in all.iter().enumerate() {
            for j in 0..k {
                phis[d][(i, j)] = row[j];
            }
        }
    }
    let phi = phis[0].clone();
    let dphi = phis[1].clone();

    // Mass (≈ identity) and stiffness in the φ basis.
    let mut wm = phi.clone();
    let mut ws = dphi.clone();
    let mut wp = phi.clone();
    for (i, &ri) in r.iter().enumerate() {
        let rm = ri.powi(mi);
        for j in 0..k {
            wm[(i, j)] *= w[i] * rm;
            ws[(i, j)] *= w[i] * rm;
            wp[(i, j)] *= w[i] * mf * ri.powi(mi - 2);
        }
    }
    let mass = phi.transpose() * &wm;
    let stiff = dphi.transpose() * &ws + phi.transpose() * &wp;
    let mass = symmetrize(mass);
    let stiff = symmetrize(stiff);

    let chol = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("auxiliary Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Numerical("auxiliary Gram factor is singular".into()))?;
    let reduced = symmetrize(&linv * &stiff * linv.transpose());
    let eig = SymmetricEigen::try_new(reduced, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let lt_inv = linv.transpose();
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut lambdas = Vec::with_capacity(n);
    for &idx in order.iter().take(n) {
        let y = eig.eigenvectors.column(idx);
        let a = &lt_inv * y;
        coeffs.push(a.iter().copied().collect());
        lambdas.push(eig.eigenvalues[idx]);
    }

    let nodal = |c: &[f64], basis: &DMatrix<f64>| -> Vec<f64> {
        (0..r.len()).map(|i| (0..k).map(|j| basis[(i, j)] * c[j]).sum()).collect()
    };
    let mut xi: Vec<Vec<f64>> = coeffs.iter().map(|c| nodal(c, &phi)).collect();
    let mut xi_r: Vec<Vec<f64>> = coeffs.iter().map(|c| nodal(c, &dphi)).collect();

    // Modified Gram–Schmidt in the r^m inner product, mirrored on the
    // derivative samples and the coefficient vectors.
    let rm = grid.r_pow_m();
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        w.iter().zip(&rm).zip(a.iter().zip(b)).map(|((w, rm), (a, b))| w * rm * a * b).sum()
    };
    for j in 0..n {
        for i in 0..j {
            let p = inner(&xi[j], &xi[i]);
            let (done, rest) = xi.split_at_mut(j);
            axpy(&mut rest[0], -p, &done[i]);
            let (done, rest) = xi_r.split_at_mut(j);
            axpy(&mut rest[0], -p, &done[i]);
            let (done, rest) = coeffs.split_at_mut(j);
            axpy(&mut rest[0], -p, &done[i]);
        }
        let norm = inner(&xi[j], &xi[j]).sqrt();
        // Sign convention: positive near the origin.
        let s = if xi[j][0] < 0.0 { -1.0 / norm } else { 1.0 / norm };
        xi[j].iter_mut().for_each(|v| *v *= s);
        xi_r[j].iter_mut().for_each(|v| *v *= s);
        coeffs[j].iter_mut().for_each(|v| *v *= s);
    }

    let higher = (2..=MAX_DERIVATIVE).map(|d| coeffs.iter().map(|c| nodal(c, &phis[d])).collect()).collect();

    if lambdas.windows(2).any(|p| !(p[1] > p[0])) || lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical("eigenvalues are not strictly increasing".into()));
    }

    Ok(EigenBasis { m, lambdas, xi, xi_r, higher, recurrence: rec, coeffs })
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    let t = a.transpose();
    (a + t) * 0.5
}

impl EigenBasis {
    /// Number of modes `N`.
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Number of grid nodes the basis was sampled on.
    pub fn nodes(&self) -> usize {
        self.xi.first().map_or(0, Vec::len)
    }

    /// Values and derivatives of every mode at an arbitrary `r ∈ [0, 1]`.
    pub fn eval(&self, r: f64) -> (Vec<f64>, Vec<f64>) {
        let mut d = self.eval_derivatives(r, 1);
        let first = d.pop().unwrap();
        (d.pop().unwrap(), first)
    }

    /// `ξ_j^{(d)}(r)` for `d = 0..=order` and every mode.
    pub fn eval_derivatives(&self, r: f64, order: usize) -> Vec<Vec<f64>> {
        let phi = self.recurrence.eval_phi(r, order);
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(a, b)| a * b).sum() };
        phi.iter().map(|p| self.coeffs.iter().map(|c| dot(c, p)).collect()).collect()
    }

    /// `Σ c_j ξ_j(r)` and its derivative at an arbitrary point.
    pub fn eval_series(&self, c: &[f64], r: f64) -> (f64, f64) {
        let (v, d) = self.eval(r);
        let f = c.iter().zip(&v).map(|(c, v)| c * v).sum();
        let df = c.iter().zip(&d).map(|(c, d)| c * d).sum();
        (f, df)
    }

    /// Largest boundary defect over the modes: `|ξ_j(0)|` and `|ξ_j'(1)|`,
    /// each relative to the mode's nodal maximum of `|ξ_j|` and `|ξ_j'|`.
    ///
    /// The condition at the origin is built into the basis; the one at
    /// `r = 1` is natural and only converges with the polynomial degree, so
    /// the highest modes carry the largest defect.
    pub fn boundary_residual(&self) -> f64 {
        let (v0, _) = self.eval(0.0);
        let (_, d1) = self.eval(1.0);
        let sup = |f: &[f64]| f.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        (0..self.len())
            .fold(0.0, |acc, j| acc.max(v0[j].abs() / sup(&self.xi[j])).max(d1[j].abs() / sup(&self.xi_r[j])))
    }

    fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        check_len(self.nodes(), grid.len())?;
        if grid.m() != self.m {
            return Err(Error::config("basis and grid have different m"));
        }
        Ok(())
    }

    /// `c_j = ⟨r^m f, ξ_j⟩`.
    pub fn project(&self, f: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        check_len(grid.len(), f.len())?;
        let wf: Vec<f64> = grid.weights().iter().zip(grid.r_pow_m()).zip(f).map(|((w, rm), f)| w * rm * f).collect();
        Ok(self.xi.iter().map(|x| x.iter().zip(&wf).map(|(a, b)| a * b).sum()).collect())
    }

    /// `Σ c_j ξ_j` at the nodes; `c` may be shorter than `N`.
    pub fn reconstruct(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.combine(c, &self.xi)
    }

    /// `Σ c_j ξ_j'` at the nodes.
    pub fn reconstruct_derivative(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.combine(c, &self.xi_r)
    }

    /// `Σ c_j ξ_j^{(d)}` at the nodes for `d ≤ 4`.
    pub fn reconstruct_nth(&self, c: &[f64], d: usize) -> Result<Vec<f64>> {
        match d {
            0 => self.combine(c, &self.xi),
            1 => self.combine(c, &self.xi_r),
            2..=MAX_DERIVATIVE => self.combine(c, &self.higher[d - 2]),
            _ => Err(Error::config(format!("mode derivatives are available up to order {MAX_DERIVATIVE}"))),
        }
    }

    fn combine(&self, c: &[f64], rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if c.len() > self.len() {
            return Err(Error::Shape { expected: self.len(), got: c.len() });
        }
        let mut out = vec![0.0; self.nodes()];
        for (cj, row) in c.iter().zip(rows) {
            axpy(&mut out, *cj, row);
        }
        Ok(out)
    }
}
