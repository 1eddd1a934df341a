//! Galerkin and Picard behaviour on the manufactured solution and the
//! example data.

use lagvac_core::eigen::{solve_eigenpairs, EigenBasis};
use lagvac_core::galerkin::{BackgroundFlow, GalerkinSystem};
use lagvac_core::initial::{BumpSpec, InitialFields, PhysicalParams};
use lagvac_core::lagrangian::{momentum_residual, LagrangianState};
use lagvac_core::manufactured::Manufactured;
use lagvac_core::picard::{picard_window, solve_global, PicardConfig};
use lagvac_core::RadialGrid;
use proptest::prelude::*;

const P: PhysicalParams = PhysicalParams { n: 2, gamma: 2.0, beta: 1.0, mu: 1.0, a: 1.0 };
const BUMP: BumpSpec = BumpSpec { center: 0.4, radius: 0.25, amplitude: 0.05 };

fn setup(panels: usize, n: usize) -> (RadialGrid, EigenBasis) {
    let g = RadialGrid::new(1, panels, 8, 4).unwrap();
    let b = solve_eigenpairs(1, n, &g).unwrap();
    (g, b)
}

/// `sup_t |(r^mρ0)^{1/2}(U − U*)|₂` over the stored time levels.
fn manufactured_error(n: usize, dt: f64, horizon: f64) -> f64 {
    let (g, b) = setup(32, n);
    let f = InitialFields::example(P, 1, None, &g).unwrap();
    let ms = Manufactured::new(P, 1).unwrap();
    let cfg = PicardConfig { dt, t_window: horizon, n_modes: n, tol: 1e-15, k_max: 40, ..Default::default() };
    let rec = solve_global(&f, horizon, &cfg, &b, &g, Some(&ms)).unwrap();
    let w = f.mass_weight(&g);
    rec.states
        .iter()
        .map(|s| {
            let d: Vec<f64> = s.u.iter().zip(g.nodes()).map(|(u, r)| u - Manufactured::u(s.t, *r)).collect();
            g.weighted_lp_norm(&d, &w, 2.0).unwrap()
        })
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_solution_converges_in_modes() {
    let e8 = manufactured_error(8, 0.01, 0.4);
    let e16 = manufactured_error(16, 0.01, 0.4);
    assert!(e16 < 0.5 * e8, "{e8} {e16}");
    assert!(e16 < 1e-4, "{e16}");
}

#[test]
fn manufactured_time_error_is_second_order() {
    // errors against a fine-step run at the same N isolate the time error
    let (g, b) = setup(32, 16);
    let f = InitialFields::example(P, 1, None, &g).unwrap();
    let ms = Manufactured::new(P, 1).unwrap();
    let horizon = 0.4;
    let run = |dt: f64| {
        let cfg = PicardConfig { dt, t_window: horizon, n_modes: 16, tol: 1e-15, k_max: 40, ..Default::default() };
        solve_global(&f, horizon, &cfg, &b, &g, Some(&ms)).unwrap().states.last().unwrap().u.clone()
    };
    let reference = run(0.4 / 256.0);
    let w = f.mass_weight(&g);
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|dt| {
            let d: Vec<f64> = run(*dt).iter().zip(&reference).map(|(a, b)| a - b).collect();
            g.weighted_lp_norm(&d, &w, 2.0).unwrap()
        })
        .collect();
    for p in errs.windows(2) {
        assert!(p[0] / p[1] >= 3.5, "{errs:?}");
    }
}

/// Max interior residual of the forced momentum equation along a
/// manufactured run, with `U_t` from centred differences.
fn fixed_point_residual(n: usize, dt: f64) -> f64 {
    let (g, b) = setup(32, n);
    let f = InitialFields::example(P, 1, None, &g).unwrap();
    let ms = Manufactured::new(P, 1).unwrap();
    let cfg = PicardConfig { dt, t_window: 0.2, n_modes: n, tol: 1e-14, k_max: 40, ..Default::default() };
    let rec = solve_global(&f, 0.2, &cfg, &b, &g, Some(&ms)).unwrap();
    let s = &rec.states;
    let w: Vec<f64> = g.nodes().iter().map(|r| if *r < 0.8 { *r } else { 0.0 }).collect();
    let mut worst = 0.0f64;
    for k in 1..s.len() - 1 {
        let ut: Vec<f64> = s[k + 1].u.iter().zip(&s[k - 1].u).map(|(a, c)| (a - c) / (2.0 * dt)).collect();
        let force = ms.pointwise_force(s[k].t, &g);
        let res = momentum_residual(&s[k], &ut, &f, Some(&force), &g).unwrap();
        worst = worst.max(g.weighted_lp_norm(&res, &w, 2.0).unwrap());
    }
    worst
}

#[test]
fn converged_iterate_satisfies_the_momentum_equation() {
    let r = [fixed_point_residual(8, 0.02), fixed_point_residual(16, 0.01), fixed_point_residual(32, 0.005)];
    assert!(r[1] < r[0] && r[2] < r[1], "{r:?}");
}

#[test]
fn contraction_is_monotone_after_the_first_iterate() {
    let (g, b) = setup(32, 16);
    let f = InitialFields::example(P, 1, Some(BUMP), &g).unwrap();
    let start = lagvac_core::picard::initial_state(&f, &b, &g).unwrap();
    let cfg = PicardConfig { n_modes: 16, ..Default::default() };
    let (states, trace) = picard_window(&f, &start, &cfg, &b, &g, None).unwrap();
    assert!(trace.converged && trace.iterations <= cfg.k_max);
    assert!(trace.energies.windows(2).skip(1).all(|w| w[1] <= w[0]), "{:?}", trace.energies);
    assert!(trace.ratios.iter().all(|r| *r <= 0.5), "{:?}", trace.ratios);
    assert_eq!(states[0], start);
}

#[test]
fn window_restarts_are_seamless() {
    let (g, b) = setup(16, 8);
    let f = InitialFields::example(P, 1, Some(BUMP), &g).unwrap();
    let cfg = PicardConfig { dt: 5e-3, t_window: 0.05, n_modes: 8, ..Default::default() };
    let rec = solve_global(&f, 0.15, &cfg, &b, &g, None).unwrap();
    assert_eq!(rec.windows.len(), 3);
    // restarting by hand from the first window's end reproduces the second window
    let mid: &LagrangianState = &rec.states[10];
    let (again, _) = picard_window(&f, mid, &cfg, &b, &g, None).unwrap();
    for (a, c) in again.iter().zip(&rec.states[10..=20]) {
        assert_eq!(a.u, c.u);
        assert_eq!(a.eta, c.eta);
    }
    assert_eq!(rec.windows[1].t_start, rec.windows[0].t_end);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stiffness_is_symmetric(t in 0.0f64..1.5) {
        let (g, b) = setup(16, 12);
        let f = InitialFields::example(P, 1, None, &g).unwrap();
        let sys = GalerkinSystem::new(&f, &b, &g).unwrap();
        let s = Manufactured::new(P, 1).unwrap().state(t, &g);
        let m = sys.stiffness(&BackgroundFlow::from_state(&s));
        prop_assert!((&m - m.transpose()).amax() <= 1e-12);
        let a = sys.mass();
        prop_assert!((a - a.transpose()).amax() <= 1e-12);
    }
}
