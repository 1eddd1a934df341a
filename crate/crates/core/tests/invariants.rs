//! Property tests of the module invariants.

use lagvac_core::cutoff::{cutoff_value, support_end, CutoffKind};
use lagvac_core::diagnostics::{energy_functionals, select_epsilon0, StateDerivatives};
use lagvac_core::eigen::solve_eigenpairs;
use lagvac_core::eulerian::{boundary_radius, invert_flow};
use lagvac_core::initial::{initial_effective_velocity, BumpSpec, InitialFields, PhysicalParams};
use lagvac_core::lagrangian::{d_eta, density_from_flow, mass, LagrangianState};
use lagvac_core::manufactured::{Dual, Manufactured};
use lagvac_core::RadialGrid;
use proptest::prelude::*;

fn params(n: usize, gamma: f64, beta: f64) -> PhysicalParams {
    PhysicalParams { n, gamma, beta, mu: 1.0, a: 1.0 }
}

/// Admissible `(n, γ, β)`.
fn admissible() -> impl Strategy<Value = (usize, f64, f64)> {
    (2usize..=3, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(n, x, y)| {
        let gamma = if n == 2 { 1.4 + 1.6 * x } else { 1.4 + 1.5 * x };
        let beta = 1.0 / 3.0 + 0.01 + y * (gamma - 1.0 - 1.0 / 3.0 - 0.01);
        (n, gamma, beta)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_is_exact_on_monomials(panels in 1usize..12, npp in 2usize..10, p in 0u32..30) {
        let g = RadialGrid::new(1, panels, npp, 2.min(npp - 1)).unwrap();
        prop_assume!((p as usize) <= g.exact_degree());
        let f = g.sample(|r| r.powi(p as i32));
        let exact = 1.0 / (p as f64 + 1.0);
        prop_assert!((g.integrate(&f) - exact).abs() < 1e-13);
    }

    #[test]
    fn differentiation_is_linear_and_kills_constants(
        a in -3.0f64..3.0, b in -3.0f64..3.0, c in -5.0f64..5.0, order in 2usize..8,
    ) {
        let g = RadialGrid::new(2, 8, 8, order).unwrap();
        let f = g.sample(|r| (3.0 * r).sin());
        let h = g.sample(|r| r * r * r - r);
        let mix: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
        let (df, dh, dm) = (g.differentiate(&f).unwrap(), g.differentiate(&h).unwrap(), g.differentiate(&mix).unwrap());
        for i in 0..g.len() {
            prop_assert!((dm[i] - a * df[i] - b * dh[i]).abs() < 1e-9 * (1.0 + dm[i].abs()));
        }
        let k = g.differentiate(&vec![c; g.len()]).unwrap();
        prop_assert!(k.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn cutoff_chain(a in 0.01f64..0.99, r in 0.0f64..1.0) {
        let z = cutoff_value(CutoffKind::Smooth, a, r);
        let zc = cutoff_value(CutoffKind::SmoothComplement, a, r);
        let x = cutoff_value(CutoffKind::Sharp, a, r);
        let xc = cutoff_value(CutoffKind::SharpComplement, a, r);
        prop_assert!((0.0..=1.0).contains(&z));
        prop_assert!(x <= z && zc >= 0.0 && zc <= xc);
        prop_assert_eq!(z + zc, 1.0);
        if r >= support_end(a) {
            prop_assert_eq!(z, 0.0);
        }
        if r <= a {
            prop_assert_eq!(z, 1.0);
        }
        prop_assert!(cutoff_value(CutoffKind::Smooth, a, (r + 0.01).min(1.0)) <= z);
    }

    #[test]
    fn example_envelope_holds_at_every_node((n, gamma, beta) in admissible(), k in 1u32..4) {
        let p = params(n, gamma, beta);
        let g = RadialGrid::new(n - 1, 16, 8, 4).unwrap();
        let f = InitialFields::example(p, k, None, &g).unwrap();
        for (rho, r) in f.rho0.iter().zip(g.nodes()) {
            let env = (1.0 - r).powf(1.0 / beta);
            prop_assert!(*rho >= f.k1 * env * (1.0 - 1e-10));
            prop_assert!(*rho <= f.k2 * env * (1.0 + 1e-10));
            // ρ0^β is the distance function 1 − r^{2k}
            prop_assert!((rho.powf(beta) - (1.0 - r.powi(2 * k as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn v0_is_additive_in_u0(shift in prop::collection::vec(-1.0f64..1.0, 3)) {
        let p = params(2, 2.0, 1.0);
        let g = RadialGrid::new(1, 16, 8, 4).unwrap();
        let bump = BumpSpec { center: 0.4, radius: 0.25, amplitude: 0.05 };
        let f = InitialFields::example(p, 1, Some(bump), &g).unwrap();
        let w = g.sample(|r| shift[0] + shift[1] * r + shift[2] * (5.0 * r).cos());
        let moved = f.with_velocity(f.u0.iter().zip(&w).map(|(a, b)| a + b).collect(), &g).unwrap();
        let v = initial_effective_velocity(&moved, &g).unwrap();
        for i in 0..g.len() {
            prop_assert!((v[i] - f.v0[i] - w[i]).abs() < 1e-12 * (1.0 + v[i].abs()));
        }
    }

    #[test]
    fn mass_identity_for_any_monotone_flow(t in 0.0f64..2.0, c in 0.5f64..1.5, m in 1usize..=2) {
        let p = params(m + 1, 2.0, 1.0);
        let g = RadialGrid::new(m, 32, 8, 4).unwrap();
        let f = InitialFields::example(p, 1, None, &g).unwrap();
        let mut s = Manufactured::new(p, 1).unwrap().state(t, &g);
        s.eta.iter_mut().for_each(|e| *e *= c);
        s.eta_r.iter_mut().for_each(|e| *e *= c);
        let m0 = f.mass(&g);
        prop_assert!(((mass(&s, &f.rho0, &g).unwrap() - m0) / m0).abs() <= 1e-12);
        // ρ is positive wherever ρ0 is
        prop_assert!(density_from_flow(&s, &f.rho0, &g).unwrap().iter().all(|x| *x > 0.0));
    }

    #[test]
    fn d_eta_of_eta_is_one(t in 0.0f64..2.0) {
        let p = params(2, 2.0, 1.0);
        let g = RadialGrid::new(1, 32, 8, 4).unwrap();
        let s = Manufactured::new(p, 1).unwrap().state(t, &g);
        let d = d_eta(&s.eta, &s, &g).unwrap();
        prop_assert!(d.iter().all(|x| (x - 1.0).abs() < 1e-8));
    }

    #[test]
    fn inversion_preserves_order(t in 0.0f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let p = params(2, 2.0, 1.0);
        let g = RadialGrid::new(1, 32, 8, 4).unwrap();
        let s = Manufactured::new(p, 1).unwrap().state(t, &g);
        let big = boundary_radius(&s, &g).unwrap();
        let (x1, x2) = (a.min(b) * big, a.max(b) * big);
        let (r1, r2) = (invert_flow(&s, x1, &g).unwrap(), invert_flow(&s, x2, &g).unwrap());
        if x1 < x2 {
            prop_assert!(r1 < r2);
        }
        prop_assert!((g.interpolate(&s.eta, r2) - x2).abs() <= 1e-12 * big.max(1.0));
        // the interpolant of η agrees with the analytic flow map
        prop_assert!((Manufactured::eta(t, r2) - x2).abs() < 1e-9);
    }

    #[test]
    fn epsilon0_is_a_positive_admissible_choice((n, gamma, beta) in admissible()) {
        let e = select_epsilon0(&params(n, gamma, beta)).unwrap();
        prop_assert!(e > 0.0 && e < 1.0);
    }

    #[test]
    fn dual_numbers_differentiate(x in 0.1f64..0.9, p in 0.3f64..3.0) {
        let d = (Dual::var(x).powf(p) * Dual::cst(2.0) + Dual::var(x).powi(3)) / (Dual::var(x) + Dual::cst(1.0));
        let f = |y: f64| (2.0 * y.powf(p) + y.powi(3)) / (y + 1.0);
        let h = 1e-5;
        let fd = (f(x + h) - f(x - h)) / (2.0 * h);
        prop_assert!((d.d - fd).abs() < 1e-7 * (1.0 + fd.abs()));
    }
}

/// Three manufactured states with their modal coefficients.
fn trajectory(grid: &RadialGrid, scale: f64) -> Vec<LagrangianState> {
    let p = params(2, 2.0, 1.0);
    let basis = solve_eigenpairs(1, 16, grid).unwrap();
    let ms = Manufactured::new(p, 1).unwrap();
    (0..3)
        .map(|i| {
            let mut s = ms.state(0.3 + 0.01 * i as f64, grid);
            s.u.iter_mut().for_each(|u| *u *= scale);
            s.u_r.iter_mut().for_each(|u| *u *= scale);
            s.modal_u = Some(basis.project(&s.u, grid).unwrap());
            s
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn functionals_are_quadratic_in_the_field(c in -3.0f64..3.0) {
        let g = RadialGrid::new(1, 16, 8, 4).unwrap();
        let basis = solve_eigenpairs(1, 16, &g).unwrap();
        let f = InitialFields::example(params(2, 2.0, 1.0), 1, None, &g).unwrap();
        let base = trajectory(&g, 1.0);
        let d = StateDerivatives::from_trajectory(&base, &basis, &g).unwrap();
        let mut scaled = d[1].clone();
        for v in scaled.u.iter_mut().chain(scaled.u_t.iter_mut()) {
            v.iter_mut().for_each(|x| *x *= c);
        }
        scaled.u_tt.iter_mut().for_each(|x| *x *= c);
        let e1 = energy_functionals(&base[1], &d[1], &f, &g, true).unwrap();
        let ec = energy_functionals(&base[1], &scaled, &f, &g, true).unwrap();
        // fourth-derivative jets cancel by ~1e4, so rounding is amplified
        let tol = 1e-10 * (1.0 + c * c);
        prop_assert!((ec.E_total - c * c * e1.E_total).abs() <= tol * e1.E_total);
        prop_assert!((ec.D_total - c * c * e1.D_total).abs() <= tol * e1.D_total);
        prop_assert!((ec.ring_E.unwrap() - c * c * e1.ring_E.unwrap()).abs() <= tol * e1.ring_E.unwrap());
    }
}
