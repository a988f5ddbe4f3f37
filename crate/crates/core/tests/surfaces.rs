use std::sync::Arc;

use descartes_core::engine::{cross_validate, drift_report, integrate, Formulation, IntegratorConfig, Tolerances};
use descartes_core::poly::Poly3;
use descartes_core::sampling::halton_box;
use descartes_core::surfaces::*;
use descartes_core::{ScalarField, Vec3};

fn spheroid() -> ScalarField {
    Poly3::new(vec![(0.5, [2, 0, 0]), (0.5, [0, 2, 0]), (2.0, [0, 0, 2])]).to_field()
}

fn sphere() -> ScalarField {
    Poly3::new(vec![(0.5, [2, 0, 0]), (0.5, [0, 2, 0]), (0.5, [0, 0, 2])]).to_field()
}

fn meridian_system(f: ScalarField, speed: f64) -> GeodesicSystem {
    let surf = LevelSurface::new(f, 0.5).unwrap();
    GeodesicSystem::new(surf, Poly3::new(vec![(1.0, [0, 0, 1])]).to_field(), Scaling::EnergyNormalized, constant_profile(0.5 * speed * speed))
}

fn start(f: &ScalarField, lat: f64) -> Vec3 {
    let surf = LevelSurface::new(f.clone(), 0.5).unwrap();
    surf.project(&Vec3::new(lat.cos() * 0.6, lat.cos() * 0.8, lat.sin())).unwrap()
}

#[test]
fn meridian_flows_are_geodesics_over_ten_units() {
    for f in [sphere(), spheroid()] {
        let sys = meridian_system(f.clone(), 0.1);
        let cart = geodesic_cartesian(&sys);
        let x0 = start(&f, -0.5);
        let tr = integrate(&cart, x0.as_slice(), &IntegratorConfig::rk4(10.0, 1e-3).sampled(0.05)).unwrap();
        assert!(tr.completed());
        let d = drift_report(&tr, &cart.invariants());
        assert!(d.get("f").unwrap().max_abs <= 1e-8, "{d:?}");
        assert!(d.get("speed2-2h").unwrap().max_abs <= 1e-7, "{d:?}");
        for y in &tr.states {
            assert!(sys.side_force(&Vec3::new(y[0], y[1], y[2])).unwrap().abs() <= 1e-6);
        }
    }
}

#[test]
fn geodesic_pair_cross_validates() {
    let f = spheroid();
    let sys = meridian_system(f.clone(), 0.2);
    let cart = geodesic_cartesian(&sys);
    let cl = geodesic_classical(&sys).unwrap();
    let x0 = start(&f, -0.3);
    let rep = cross_validate(&cart, &cl, x0.as_slice(), &IntegratorConfig::rk4(5.0, 1e-3).sampled(0.1), Tolerances::default()).unwrap();
    assert!(rep.sup_deviation <= 1e-5, "{rep:?}");
}

#[test]
fn sphere_certificate_and_rotation_control() {
    use descartes_core::cartesian::{certify, Constraint};
    let sys = meridian_system(sphere(), 1.0);
    let pts: Vec<Vec3> = halton_box(200, Vec3::repeat(-1.0), Vec3::repeat(1.0), 7)
        .into_iter()
        .filter(|p| p.norm() > 0.1 && p.xy().norm() > 0.05)
        .map(|p| p.normalize())
        .collect();
    let a = Constraint::from_gradient(&sphere());
    let cert = certify(&sys.vector_field(), &a, None, &pts);
    assert!(cert.passes(1e-6), "{}", cert.max_residual);
    let rot = descartes_core::VectorField::new(|x| x.cross(&Vec3::z()));
    let off_equator: Vec<Vec3> = pts.iter().copied().filter(|p| p[2].abs() > 0.2).collect();
    let bad = certify(&rot, &a, None, &off_equator);
    assert!(bad.max_curl_orthogonality > 1e-3);
}

#[test]
fn homogeneous_integral_along_flow() {
    let hs = HomogeneousSurface::new(LevelSurface::new(spheroid(), 0.5).unwrap(), 2.0);
    // slow enough that the flow stays clear of the equator, where x ∥ f_x
    let p = start(&spheroid(), 0.6);
    // g = 10 f − 4 r² for this quadric
    let g = descartes_core::veccalc::grad(&hs.surface.f, &p).unwrap().norm_squared();
    assert!((g - (10.0 * 0.5 - 4.0 * p.norm_squared())).abs() < 1e-12);
    for h in [constant_profile(2e-4), Arc::new(|f: f64| 4e-4 * f) as Profile] {
        let cart = homogeneous_cartesian(&hs, &h);
        let tr = integrate(&cart, p.as_slice(), &IntegratorConfig::rk4(10.0, 1e-3)).unwrap();
        let d = drift_report(&tr, &cart.invariants());
        assert!(d.get("integral").unwrap().max_abs <= 1e-7, "{d:?}");
        assert!(d.get("f").unwrap().max_abs <= 1e-8, "{d:?}");
    }
}

#[test]
fn kepler_invariants_over_one_orbit() {
    for b in [Vec3::zeros(), Vec3::new(0.5, 0.2, 0.0)] {
        let ks = KeplerSurface::new(b, Vec3::new(0.0, 0.0, 1.1)).unwrap();
        let cart = kepler_cartesian(&ks);
        let x0 = ks.point_towards(&Vec3::new(1.0, 0.3, 0.0)).unwrap();
        let period = ks.period();
        let tr = integrate(&cart, x0.as_slice(), &IntegratorConfig::rk4(period, 1e-3)).unwrap();
        let d = drift_report(&tr, &cart.invariants());
        assert!(d.max_abs() <= 1e-7, "{d:?}");
        let end = tr.last();
        assert!((Vec3::new(end[0], end[1], end[2]) - x0).norm() < 1e-6);
        let cl = KeplerClassical { ks };
        let rep = cross_validate(&cart, &cl, x0.as_slice(), &IntegratorConfig::rk4(5.0, 1e-3).sampled(0.1), Tolerances::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}

#[test]
fn ellipsoid_principal_directions_brute_force() {
    let f = Poly3::new(vec![(0.5, [2, 0, 0]), (1.0, [0, 2, 0]), (1.5, [0, 0, 2])]).to_field();
    let surf = LevelSurface::new(f, 0.5).unwrap();
    let x = surf.project(&Vec3::new(0.5, 0.4, 0.3)).unwrap();
    let rep = principal_directions(&surf, &x).unwrap();
    let n = surf.normal(&x).unwrap().normalize();
    assert!(rep.tau1.dot(&rep.tau2).abs() <= 1e-10);
    assert!(rep.tau1.dot(&n).abs() <= 1e-10 && rep.tau2.dot(&n).abs() <= 1e-10);
    assert!(rep.det_at_roots <= 1e-9);
    let (hi, lo) = brute_force_extrema(&surf, &x, 10_000).unwrap();
    assert!((hi - rep.extrema.0).abs() <= 1e-8 && (lo - rep.extrema.1).abs() <= 1e-8, "{hi} {lo} {:?}", rep.extrema);
}

#[test]
fn unit_sphere_curvature() {
    let surf = LevelSurface::new(sphere(), 0.5).unwrap();
    for p in halton_box(50, Vec3::repeat(-1.0), Vec3::repeat(1.0), 3) {
        if p.norm() < 0.1 {
            continue;
        }
        let rep = principal_directions(&surf, &p.normalize()).unwrap();
        assert!((rep.k_oracle - 1.0).abs() <= 1e-8);
        assert!(rep.umbilic);
    }
}
