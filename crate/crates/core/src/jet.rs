//! Truncated Taylor jets: `a[k]` holds the k-th derivative at a point.

use alloc::vec::Vec;

pub(crate) fn jet_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|k| (0..=k).map(|j| binomial(k, j) * a[j] * b[k - j]).sum()).collect()
}

pub(crate) fn jet_recip(h: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(h.len());
    y.push(1.0 / h[0]);
    for n in 1..h.len() {
        let s: f64 = (1..=n).map(|k| binomial(n, k) * h[k] * y[n - k]).sum();
        y.push(-s / h[0]);
    }
    y
}

fn binomial(n: usize, k: usize) -> f64 {
    const ROWS: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    ROWS[n][k]
}

/// `D_η g = g_r/η_r` on jets; the result is one order shorter.
pub(crate) fn jet_d(g: &[f64], inv_eta_r: &[f64]) -> Vec<f64> {
    jet_mul(&g[1..], inv_eta_r)
}
