//! Independent reference values for the first Sturm–Liouville eigenvalue:
//! roots of `J₁'` (disc) and `j₁'` (ball), found by bracketing and
//! bisection on explicit formulas. Nothing here touches the solver.

/// `J₁'(x) = (J₀(x) − J₂(x))/2` from the power series
/// `J_ν(x) = Σ (−1)^k (x/2)^{2k+ν} / (k!(k+ν)!)`.
pub fn bessel_j1_prime(x: f64) -> f64 {
    let jn = |nu: i32| {
        let h = 0.5 * x;
        let mut term = h.powi(nu) / (1..=nu).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..60 {
            term *= -h * h / (k as f64 * (k + nu) as f64);
            sum += term;
        }
        sum
    };
    0.5 * (jn(0) - jn(2))
}

/// Derivative of `j₁(x) = sin x/x² − cos x/x`.
pub fn spherical_j1_prime(x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    2.0 * c / (x * x) - 2.0 * s / (x * x * x) + s / x
}

/// The first `count` sign changes of `f` on a scan of `(a, b)`, each refined
/// by bisection to machine precision.
pub fn roots(f: impl Fn(f64) -> f64, a: f64, b: f64, count: usize) -> Vec<f64> {
    let steps = 20000;
    let h = (b - a) / steps as f64;
    let mut out = Vec::new();
    let mut lo = a;
    let mut flo = f(lo);
    for i in 1..=steps {
        let hi = a + i as f64 * h;
        let fhi = f(hi);
        if flo * fhi <= 0.0 && out.len() < count {
            let (mut l, mut u, mut fl) = (lo, hi, flo);
            for _ in 0..200 {
                let mid = 0.5 * (l + u);
                if mid <= l || mid >= u {
                    break;
                }
                let fm = f(mid);
                if fl * fm <= 0.0 {
                    u = mid;
                } else {
                    l = mid;
                    fl = fm;
                }
            }
            out.push(0.5 * (l + u));
        }
        lo = hi;
        flo = fhi;
    }
    assert_eq!(out.len(), count, "not enough roots in ({a}, {b})");
    out
}

/// The first `count` eigenvalues of `−(r^mξ')' + m r^{m−2}ξ = λ r^mξ` with
/// `ξ(0) = 0`, `ξ'(1) = 0`: squares of the positive roots of `J₁'` (m = 1)
/// or `j₁'` (m = 2).
pub fn eigenvalues(m: usize, count: usize) -> Vec<f64> {
    let b = 4.0 * (count as f64 + 1.0);
    let r = match m {
        1 => roots(bessel_j1_prime, 0.5, b, count),
        2 => roots(spherical_j1_prime, 0.5, b, count),
        _ => panic!("m must be 1 or 2"),
    };
    r.iter().map(|x| x * x).collect()
}

pub fn first_eigenvalue(m: usize) -> f64 {
    eigenvalues(m, 1)[0]
}
