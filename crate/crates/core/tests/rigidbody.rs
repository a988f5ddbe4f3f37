use std::sync::Arc;

use descartes_core::engine::{drift_report, integrate, Formulation, IntegratorConfig};
use descartes_core::rigidbody::*;
use descartes_core::veccalc::Fn1;
use descartes_core::Vec3;

fn body() -> Inertia {
    Inertia::new(2.0, 1.0, 1.5).unwrap()
}

fn subcases() -> Vec<(&'static str, Inertia, ClosedForm)> {
    vec![
        ("suslov", body(), ClosedForm::Suslov { c1: 0.7, c2: -0.4, alpha: 0.3, beta: 1.1 }),
        (
            "kz",
            body(),
            ClosedForm::KharlamovaZabelina { h_tilde: 0.01, c1: 0.1, c2: 0.05, c: 0.02, shift: 0.0, u0: 0.5 },
        ),
        ("kozlov", Inertia::new(4.0, 4.0, 3.0).unwrap(), ClosedForm::Kozlov { h: 1.5, c: 0.3, g3_0: 0.6, x0: 0.2 }),
        (
            "tisserand",
            body(),
            ClosedForm::Tisserand { a1: 1.0, a2: 1.0, b1: 0.9, b2: 0.95, h1: -0.98, h2: -0.99, phi1: -0.6, phi2: 0.1 },
        ),
    ]
}

/// Closed form against classical RK4 over T = 5, plus ODE residual and integrals.
#[test]
fn subcase_closed_forms_match_classical_integration() {
    for (name, inertia, cf) in subcases() {
        let h = 0.25;
        let mp = subcase_mu(&cf.spec(), &inertia).unwrap();
        let u = mp.potential(&inertia, h);
        let s_end = cf.s_at_time(&inertia, 5.0).unwrap();
        let path = cf.path(&inertia, s_end, 41).unwrap();
        assert!((path.last().unwrap().t - 5.0).abs() < 1e-9, "{name}");
        for p in &path {
            let (k1, k2) = suslov_first_integrals(&inertia, &u, &p.state).unwrap();
            assert!((k1 - h).abs() < 1e-8, "{name} K1 {k1}");
            assert!((k2 - 1.0).abs() < 1e-9, "{name} K2 {k2}");
            let r = cf.ode_residual(&inertia, p.s, h).unwrap();
            assert!(r < 1e-8, "{name} residual {r} at s = {}", p.s);
        }
        let cl = SuslovClassical::new(inertia, mp.clone(), h);
        let y0 = cl.initial_state(path[0].state.gamma.as_slice()).unwrap();
        let tr = integrate(&cl, &y0, &IntegratorConfig::rk4(5.0, 1e-3)).unwrap();
        let mut worst = 0.0f64;
        for p in &path {
            let y = tr.interpolate(p.t).unwrap();
            let g = Vec3::new(y[2], y[3], y[4]);
            worst = worst.max((g - p.state.gamma).amax());
            worst = worst.max((y[0] - p.state.omega[0]).abs()).max((y[1] - p.state.omega[1]).abs());
        }
        assert!(worst < 1e-5, "{name}: deviation {worst}");
        let drift = drift_report(&tr, &cl.invariants());
        assert!(drift.get("K1").unwrap().max_abs < 1e-8, "{name}: {drift:?}");
        assert!(drift.get("K2").unwrap().max_abs < 1e-9, "{name}: {drift:?}");
    }
}

#[test]
fn cartesian_flow_keeps_correspondence() {
    for (name, inertia, cf) in subcases() {
        let mp = subcase_mu(&cf.spec(), &inertia).unwrap();
        let sys = SuslovCartesian { inertia, mu: mp.clone(), h: 0.0 };
        let g0 = cf.gamma_at(&inertia, cf.s0()).unwrap();
        let tr = integrate(&sys, g0.as_slice(), &IntegratorConfig::rk4(5.0, 1e-3).sampled(0.5)).unwrap();
        let cl = SuslovClassical::new(inertia, mp.clone(), 0.0);
        let yk = integrate(&cl, &cl.initial_state(g0.as_slice()).unwrap(), &IntegratorConfig::rk4(5.0, 1e-3)).unwrap();
        for (t, y) in tr.times.iter().zip(&tr.states) {
            let k = yk.interpolate(*t).unwrap();
            let (a, b) = mp.correspondence(&inertia, &BodyState { omega: Vec3::new(k[0], k[1], 0.0), gamma: Vec3::new(y[0], y[1], y[2]) });
            assert!(a.abs() < 1e-8 && b.abs() < 1e-8, "{name} at t = {t}: {a} {b}");
        }
        let drift = drift_report(&tr, &sys.invariants());
        assert!(drift.get("K2").unwrap().max_abs < 1e-9, "{name}");
    }
}

#[test]
fn suslov_sines_over_ten_units() {
    let i = body();
    let cf = ClosedForm::Suslov { c1: 0.7, c2: -0.4, alpha: 0.3, beta: 1.1 };
    let mp = subcase_mu(&cf.spec(), &i).unwrap();
    let cl = SuslovClassical::new(i, mp, 0.0);
    let g0 = cf.gamma_at(&i, 0.0).unwrap();
    let tr = integrate(&cl, &cl.initial_state(g0.as_slice()).unwrap(), &IntegratorConfig::rk4(10.0, 1e-3).sampled(0.25)).unwrap();
    for (t, y) in tr.times.iter().zip(&tr.states) {
        let g = cf.gamma_at(&i, *t).unwrap();
        assert!((Vec3::new(y[2], y[3], y[4]) - g).amax() < 1e-6);
    }
}

#[test]
fn kozlov_quadrature_matches_angle_flow() {
    let i = Inertia::new(4.0, 4.0, 3.0).unwrap();
    let cf = ClosedForm::Kozlov { h: 1.5, c: 0.3, g3_0: 0.6, x0: 0.2 };
    let flow = AngleFlow::kozlov(&i, 1.5, 0.3, Branch::Positive);
    let x0 = [0.2, 0.0, 0.6f64.acos()];
    let tr = integrate(&flow, &flow.initial_state(&x0).unwrap(), &IntegratorConfig::rk4(5.0, 1e-3).sampled(0.5)).unwrap();
    for (t, y) in tr.times.iter().zip(&tr.states) {
        let s = cf.s_at_time(&i, *t).unwrap();
        let g = cf.gamma_at(&i, s).unwrap();
        let p = flow.position(y);
        assert!((Vec3::new(p[0], p[1], p[2]) - g).amax() < 1e-6, "t = {t}");
    }
    // negative branch runs γ₃ the other way
    let back = AngleFlow::kozlov(&i, 1.5, 0.3, Branch::Negative);
    let tb = integrate(&back, &x0, &IntegratorConfig::rk4(0.5, 1e-3)).unwrap();
    assert!(tb.last()[2] < x0[2]);
}

#[test]
fn kozlov_energy_along_angle_flow() {
    let i = Inertia::new(4.0, 4.0, 3.0).unwrap();
    let mp = subcase_mu(&SubcaseSpec::Kozlov { h: 1.5, c: 0.3 }, &i).unwrap();
    let u = mp.potential(&i, 0.4);
    let flow = AngleFlow::kozlov(&i, 1.5, 0.3, Branch::Positive);
    let tr = integrate(&flow, &[0.2, 0.0, 0.9], &IntegratorConfig::rk4(5.0, 1e-3)).unwrap();
    for (y, d) in tr.states.iter().zip(&tr.derivatives) {
        let e = EulerState::new(y[0], y[1], y[2]);
        let w = omega_of_rates(&e, &Vec3::new(d[0], d[1], d[2]));
        assert!(w[2].abs() < 1e-12);
        let s = BodyState { omega: w, gamma: gamma_of_angles(&e) };
        let (k1, _) = suslov_first_integrals(&i, &u, &s).unwrap();
        assert!((k1 - 0.4).abs() < 1e-7);
    }
}

#[test]
fn tisserand_via_separable_quadrature() {
    let i = body();
    let cf = ClosedForm::Tisserand { a1: 1.0, a2: 1.0, b1: 0.9, b2: 0.95, h1: -0.98, h2: -0.99, phi1: -0.6, phi2: 0.1 };
    let f1: Fn1 = Arc::new(|g| (0.02 - 0.1 * g * g).sqrt());
    let f2: Fn1 = Arc::new(|g| (0.01 - 0.05 * g * g).sqrt());
    let g0 = cf.gamma_at(&i, 0.0).unwrap();
    let p = separable_quadrature(&f1, &f2, &i, (g0[0], g0[1]), 1.0, 11).unwrap();
    for (tau, g) in p.tau.iter().zip(&p.gamma) {
        let want = cf.gamma_at(&i, *tau).unwrap();
        assert!((g - want).amax() < 1e-9, "tau = {tau}");
    }
    for (tau, t) in p.tau.iter().zip(&p.times) {
        assert!((cf.time_at(&i, *tau).unwrap() - t).abs() < 1e-9);
    }
    let mp = subcase_mu(&cf.spec(), &i).unwrap();
    let tr = p.to_trajectory(&i, &mp).unwrap();
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn kz_domain_and_turning_points() {
    let i = body();
    let cf = ClosedForm::KharlamovaZabelina { h_tilde: 0.01, c1: 0.1, c2: 0.05, c: 0.02, shift: 0.0, u0: 0.5 };
    assert!(cf.gamma_at(&i, -0.6).is_err());
    assert!(matches!(cf.gamma_at(&i, 50.0), Err(descartes_core::Error::TurningPoint(_))));
    let tis = ClosedForm::Tisserand { a1: 1.0, a2: 1.0, b1: 0.9, b2: 0.95, h1: -0.98, h2: -0.99, phi1: -0.6, phi2: 0.1 };
    assert!(tis.s_at_time(&i, 1e3).is_err());
}

#[test]
fn veselov_flow_invariants() {
    let i = Inertia::new(1.0, 1.0, 1.6).unwrap();
    for a in [0.0, 0.3] {
        let sv = SymmetricVeselov::new(i, a, Arc::new(|z: f64| 0.4 + 0.1 * z), Arc::new(|x: f64| 0.8 + 0.2 * x.sin())).unwrap();
        let flow = AngleFlow::veselov(&sv.spec);
        let tr = integrate(&flow, &[0.3, 0.0, 1.2], &IntegratorConfig::rk4(10.0, 1e-3).sampled(0.1)).unwrap();
        for y in &tr.states {
            let e = EulerState::new(y[0], y[1], y[2]);
            let w = veselov_omega_integrals(&sv.spec, &e).unwrap();
            assert!(sv.invariant(&e, &w).unwrap().abs() < 1e-7);
            assert!((gamma_of_angles(&e).dot(&w) + a).abs() < 1e-9);
        }
    }
}

#[test]
fn veselov_classical_matches_field_when_a_is_zero() {
    let i = Inertia::new(1.0, 1.0, 1.6).unwrap();
    let sv = SymmetricVeselov::new(i, 0.0, Arc::new(|_| 0.3), Arc::new(|_| 0.7)).unwrap();
    let cl = VeselovClassical::new(sv.spec.clone(), 0.0);
    let flow = AngleFlow::veselov(&sv.spec);
    let x0 = [0.3, 0.0, 1.2];
    let tk = integrate(&cl, &cl.initial_state(&x0).unwrap(), &IntegratorConfig::rk4(5.0, 1e-3)).unwrap();
    let tc = integrate(&flow, &x0, &IntegratorConfig::rk4(5.0, 1e-3).sampled(0.25)).unwrap();
    for (t, y) in tc.times.iter().zip(&tc.states) {
        let g = flow.position(y);
        let k = tk.interpolate(*t).unwrap();
        let d = (0..3).map(|j| (g[j] - k[3 + j]).abs()).fold(0.0, f64::max);
        assert!(d < 1e-6, "t = {t}: {d}");
    }
    let drift = drift_report(&tk, &cl.invariants());
    assert!(drift.max_abs() < 1e-7, "{drift:?}");
}

#[test]
fn closed_forms_recovered_from_initial_gamma() {
    for (name, inertia, cf) in subcases() {
        let g0 = cf.gamma_at(&inertia, cf.s0()).unwrap();
        let back = ClosedForm::from_initial(&cf.spec(), &inertia, &g0).unwrap();
        for t in [0.0, 1.0, 3.0] {
            let a = cf.gamma_at(&inertia, cf.s_at_time(&inertia, t).unwrap()).unwrap();
            let b = back.gamma_at(&inertia, back.s_at_time(&inertia, t).unwrap()).unwrap();
            assert!((a - b).amax() < 1e-10, "{name} at t = {t}");
        }
    }
}
