use std::sync::Arc;

use descartes_core::engine::{cross_validate, drift_report, integrate, Formulation, IntegratorConfig, Tolerances};
use descartes_core::nonholo::*;
use descartes_core::Vec3;

fn cfg(t: f64) -> IntegratorConfig {
    IntegratorConfig::rk4(t, 1e-3).sampled(0.05)
}

#[test]
fn inertial_sleigh_cross_validates() {
    let p = SleighParams::new(1.5, 0.7, 0.4).unwrap();
    let lp = LambdaPair::inertial(&p, 1.2, 0.3);
    for s in [Vec3::new(0.1, 0.0, 0.0), Vec3::new(2.0, 1.0, -1.0)] {
        assert!(sleigh_pde_residual(&lp, &p, &s).unwrap().abs() <= 1e-10);
    }
    let cart = sleigh_cartesian(&lp, &p);
    let cl = sleigh_classical(&lp, &p).unwrap();
    let rep = cross_validate(&cart, &cl, &[0.2, 0.0, 0.0], &cfg(5.0), Tolerances::default()).unwrap();
    assert!(rep.pass, "{rep:?}");
    // kinetic energy equals m C0²/2 along the closed form
    let tr = integrate(&cart, &[0.2, 0.0, 0.0], &cfg(5.0)).unwrap();
    for y in &tr.states {
        let v = sleigh_field(&lp, &p, &Vec3::new(y[0], y[1], y[2])).unwrap();
        assert!((p.kinetic(&v) - 0.5 * 1.5 * 1.2 * 1.2).abs() <= 1e-10);
    }
}

#[test]
fn sleigh_quadrature_matches_rk4() {
    let p = SleighParams::new(1.0, 1.0, 1.0).unwrap();
    let (q, e) = (p.q(), p.eps);
    let l2: Fn1 = Arc::new(move |x| (q * e * x).sin());
    let l3: Fn1 = Arc::new(move |x| q * (q * e * x).cos());
    let tr = sleigh_quadrature(&l2, &l3, &p, &Vec3::zeros(), 1.2, 13).unwrap();
    let lp = LambdaPair::inertial(&p, 1.0, 0.0);
    let cart = sleigh_cartesian(&lp, &p);
    let num = integrate(&cart, &[0.0, 0.0, 0.0], &IntegratorConfig::rk4(tr.t_final(), 1e-3)).unwrap();
    for (t, y) in tr.times.iter().zip(&tr.states) {
        let z = num.interpolate(*t).unwrap();
        let d = (0..3).map(|k| (y[k] - z[k]).abs()).fold(0.0, f64::max);
        assert!(d <= 1e-6, "t = {t}: {d}");
        // speed invariant of the inertial family
        let v = l3(y[0]);
        let w = l2(y[0]);
        assert!((p.j() * v * v + p.m * w * w - p.m).abs() <= 1e-12);
    }
}

#[test]
fn skate_with_gravity() {
    let p = SleighParams::new(1.0, 0.5, 0.0).unwrap();
    let (c0, c1, g) = (1.0, 0.0, 9.8);
    let cart = skate_cartesian(&p, c0, c1, g);
    let tr = integrate(&cart, &[0.3, 0.0, 0.0], &cfg(5.0)).unwrap();
    let d = drift_report(&tr, &cart.invariants());
    assert!(d.get("energy").unwrap().max_abs <= 1e-8, "{d:?}");
    let cl = skate_classical(&p, c0, c1, g).unwrap();
    let rep = cross_validate(&cart, &cl, &[0.3, 0.0, 0.0], &cfg(5.0), Tolerances::default()).unwrap();
    assert!(rep.sup_deviation <= 1e-6, "{rep:?}");
    // without gravity the skate glides at constant speed C1
    let v = skate_gravity_flow(1.0, 0.7, 0.0, &Vec3::new(1.3, 0.0, 0.0)).unwrap();
    assert!((v[1].hypot(v[2]) - 0.7).abs() < 1e-15);
}

#[test]
fn rosenberg_pair() {
    let ps = ParticleSystem::new(Arc::new(|x| x), Arc::new(|_| 0.0), 1.0, Arc::new(|_| 0.4));
    let cart = rosenberg_cartesian(&ps);
    let cl = rosenberg_classical(&ps).unwrap();
    let rep = cross_validate(&cart, &cl, &[0.0, 0.0, 0.5], &cfg(5.0), Tolerances::default()).unwrap();
    assert!(rep.sup_deviation <= 1e-6, "{rep:?}");
    let tk = integrate(&cl, &cl.initial_state(&[0.0, 0.0, 0.5]).unwrap(), &cfg(5.0)).unwrap();
    let d = drift_report(&tk, &cl.invariants());
    assert!(d.get("momentum").unwrap().max_abs <= 1e-8 && d.get("energy").unwrap().max_abs <= 1e-8, "{d:?}");
    // with a force function the energy-consistent b keeps the pair together
    let ps = ParticleSystem::energy_consistent(Arc::new(|x: f64| 0.5 * x), Arc::new(|x: f64| -0.5 * x), 0.8, 2.0, -1.0);
    let rep = cross_validate(&rosenberg_cartesian(&ps), &rosenberg_classical(&ps).unwrap(), &[0.0, 0.0, 0.3], &cfg(3.0), Tolerances::default()).unwrap();
    assert!(rep.sup_deviation <= 1e-6, "{rep:?}");
}
