//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::fs;
use std::sync::Arc;
use std::time::Instant;

use descartes_core::cartesian::{certify, Constraint};
use descartes_core::engine::{cross_validate, drift_report, integrate, integrate_first_order, Formulation, IntegratorConfig, Tolerances};
use descartes_core::nonholo::{sleigh_cartesian, sleigh_classical, sleigh_field, sleigh_pde_residual, LambdaPair, SleighParams};
use descartes_core::poly::{Poly3, PolyField};
use descartes_core::rigidbody::*;
use descartes_core::sampling::halton_box;
use descartes_core::surfaces::*;
use descartes_core::veccalc::{curl, curl_cross_identity_residual, div, grad, vec3, Fn1};
use descartes_core::{ScalarField, Vec3, VectorField};
use descartes_dyn::run::{run, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn quadric(a: [f64; 3]) -> ScalarField {
    Poly3::new(vec![(0.5 * a[0], [2, 0, 0]), (0.5 * a[1], [0, 2, 0]), (0.5 * a[2], [0, 0, 2])]).to_field()
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn vector_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut cg, mut dc, mut cc) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let p = Poly3::random(&mut rng, 3);
        let gp = p.gradient();
        let g = VectorField::new(move |x| vec3(gp[0].eval(x), gp[1].eval(x), gp[2].eval(x)));
        let f = PolyField::random(&mut rng, 3).to_field();
        let rot_f = VectorField::new(move |x| curl(&f, x).unwrap_or(Vec3::repeat(f64::NAN)));
        let a = PolyField::random(&mut rng, 2).to_field();
        let b = PolyField::random(&mut rng, 2).to_field();
        for _ in 0..100 {
            let x = vec3(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            cg = cg.max(curl(&g, &x).map_err(e)?.norm());
            dc = dc.max(div(&rot_f, &x).map_err(e)?.abs());
            cc = cc.max(curl_cross_identity_residual(&a, &b, &x).map_err(e)?.norm());
        }
    }
    Ok((cg <= 1e-6 && dc <= 1e-6 && cc <= 1e-6, format!("curl grad {cg:.1e}, div curl {dc:.1e}, curl cross {cc:.1e} (1000 points)")))
}

fn meridian(a: [f64; 3], speed: f64) -> Result<GeodesicSystem, String> {
    let surf = LevelSurface::new(quadric(a), 0.5).map_err(e)?;
    Ok(GeodesicSystem::new(surf, Poly3::new(vec![(1.0, [0, 0, 1])]).to_field(), Scaling::EnergyNormalized, constant_profile(0.5 * speed * speed)))
}

fn sphere_certificate() -> Outcome {
    let sys = meridian([1.0; 3], 1.0)?;
    let pts: Vec<Vec3> = halton_box(400, Vec3::repeat(-1.0), Vec3::repeat(1.0), 11)
        .into_iter()
        .filter(|p| p.norm() > 0.1 && p.xy().norm() > 0.05 * p.norm())
        .map(|p| p.normalize())
        .take(200)
        .collect();
    let a = Constraint::from_gradient(&quadric([1.0; 3]));
    let cert = certify(&sys.vector_field(), &a, None, &pts);
    let rot = VectorField::new(|x| x.cross(&Vec3::z()));
    let off: Vec<Vec3> = pts.iter().copied().filter(|p| p[2].abs() > 0.2).collect();
    let bad = certify(&rot, &a, None, &off);
    Ok((
        pts.len() == 200 && cert.passes(1e-6) && bad.max_curl_orthogonality > 1e-3,
        format!("meridian residual {:.1e} on {} points; rotation (a, rot v) up to {:.2} on {} off-equator points", cert.max_residual, pts.len(), bad.max_curl_orthogonality, off.len()),
    ))
}

fn geodesics() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for a in [[1.0; 3], [1.0, 1.0, 4.0]] {
        let sys = meridian(a, 0.1)?;
        let cart = geodesic_cartesian(&sys);
        let x0 = sys.surface.project(&vec3(0.6 * 0.5f64.cos(), 0.8 * 0.5f64.cos(), -0.5f64.sin())).map_err(e)?;
        let tr = integrate(&cart, x0.as_slice(), &IntegratorConfig::rk4(10.0, 1e-3).sampled(0.05)).map_err(e)?;
        if !tr.completed() {
            return Ok((false, format!("flow stopped: {:?}", tr.termination)));
        }
        let d = drift_report(&tr, &cart.invariants());
        let fd = d.get("f").ok_or("no f monitor")?.max_abs;
        let ed = d.get("speed2-2h").ok_or("no energy monitor")?.max_abs;
        let mut side = 0.0f64;
        for y in &tr.states {
            side = side.max(sys.side_force(&vec3(y[0], y[1], y[2])).map_err(e)?.abs());
        }
        worst = (worst.0.max(fd), worst.1.max(side), worst.2.max(ed));
    }
    Ok((
        worst.0 <= 1e-8 && worst.1 <= 1e-6 && worst.2 <= 1e-7,
        format!("sphere and spheroid over T = 10: |f - c| {:.1e}, side force {:.1e}, speed^2 - 2h drift {:.1e}", worst.0, worst.1, worst.2),
    ))
}

fn homogeneous() -> Outcome {
    let surf = LevelSurface::new(quadric([1.0, 1.0, 4.0]), 0.5).map_err(e)?;
    let hs = HomogeneousSurface::new(surf.clone(), 2.0);
    let p = surf.project(&vec3(0.6 * 0.6f64.cos(), 0.8 * 0.6f64.cos(), 0.6f64.sin())).map_err(e)?;
    let g = grad(&surf.f, &p).map_err(e)?.norm_squared();
    let g_ok = (g - (10.0 * 0.5 - 4.0 * p.norm_squared())).abs() < 1e-12;
    let mut drift = 0.0f64;
    for h in [constant_profile(2e-4), Arc::new(|f: f64| 4e-4 * f) as Profile] {
        let cart = homogeneous_cartesian(&hs, &h);
        let tr = integrate(&cart, p.as_slice(), &IntegratorConfig::rk4(10.0, 1e-3)).map_err(e)?;
        drift = drift.max(drift_report(&tr, &cart.invariants()).get("integral").ok_or("no integral monitor")?.max_abs);
    }
    Ok((g_ok && drift <= 1e-7, format!("g = 10f - 4r^2 holds: {g_ok}; integral drift {drift:.1e} over T = 10")))
}

fn kepler() -> Outcome {
    let (mut drift, mut res) = (0.0f64, 0.0f64);
    for b in [Vec3::zeros(), vec3(0.5, 0.2, 0.0)] {
        let ks = KeplerSurface::new(b, vec3(0.0, 0.0, 1.1)).map_err(e)?;
        let cart = kepler_cartesian(&ks);
        let x0 = ks.point_towards(&vec3(1.0, 0.3, 0.0)).map_err(e)?;
        let h = 1e-3;
        let tr = integrate(&cart, x0.as_slice(), &IntegratorConfig::rk4(ks.period(), h)).map_err(e)?;
        drift = drift.max(drift_report(&tr, &cart.invariants()).max_abs());
        // second differences of the integrated trajectory
        let s = &tr.states;
        for k in 1..s.len() - 2 {
            let (dt0, dt1) = (tr.times[k] - tr.times[k - 1], tr.times[k + 1] - tr.times[k]);
            if (dt0 - h).abs() > 1e-12 || (dt1 - h).abs() > 1e-12 {
                continue;
            }
            let x = vec3(s[k][0], s[k][1], s[k][2]);
            let acc = (vec3(s[k + 1][0], s[k + 1][1], s[k + 1][2]) - 2.0 * x + vec3(s[k - 1][0], s[k - 1][1], s[k - 1][2])) / (h * h);
            res = res.max((acc + x / x.norm().powi(3)).norm());
        }
    }
    Ok((drift <= 1e-7 && res <= 1e-6, format!("invariant drift {drift:.1e} over one orbit (b = 0 and |b|^2 = 0.29); x'' + x/r^3 {res:.1e}")))
}

fn curvature() -> Outcome {
    let sphere = LevelSurface::new(quadric([1.0; 3]), 0.5).map_err(e)?;
    let mut k = 0.0f64;
    for p in halton_box(50, Vec3::repeat(-1.0), Vec3::repeat(1.0), 3) {
        if p.norm() > 0.1 {
            k = k.max((principal_directions(&sphere, &p.normalize()).map_err(e)?.k_oracle - 1.0).abs());
        }
    }
    let ell = LevelSurface::new(quadric([1.0, 2.0, 3.0]), 0.5).map_err(e)?;
    let (mut orth, mut brute, mut det) = (0.0f64, 0.0f64, 0.0f64);
    for q in [vec3(0.5, 0.4, 0.3), vec3(-0.2, 0.6, 0.1), vec3(0.7, -0.1, -0.4)] {
        let x = ell.project(&q).map_err(e)?;
        let r = principal_directions(&ell, &x).map_err(e)?;
        let n = ell.normal(&x).map_err(e)?.normalize();
        orth = orth.max(r.tau1.dot(&r.tau2).abs()).max(r.tau1.dot(&n).abs()).max(r.tau2.dot(&n).abs());
        let (hi, lo) = brute_force_extrema(&ell, &x, 10_000).map_err(e)?;
        brute = brute.max((hi - r.extrema.0).abs()).max((lo - r.extrema.1).abs());
        det = det.max(r.det_at_roots);
    }
    Ok((
        k <= 1e-8 && orth <= 1e-10 && brute <= 1e-8 && det <= 1e-9,
        format!("|K - 1| {k:.1e}; orthogonality/tangency {orth:.1e}; brute-force gap {brute:.1e}; det R_z {det:.1e}"),
    ))
}

fn sleigh() -> Outcome {
    let p = SleighParams::new(1.5, 0.7, 0.4).map_err(e)?;
    let (c0, c) = (1.2, 0.3);
    let lp = LambdaPair::inertial(&p, c0, c);
    let mut pde = 0.0f64;
    for s in halton_box(100, vec3(-PI, -2.0, -2.0), vec3(PI, 2.0, 2.0), 5) {
        pde = pde.max(sleigh_pde_residual(&lp, &p, &s).map_err(e)?.abs());
    }
    let cart = sleigh_cartesian(&lp, &p);
    let cl = sleigh_classical(&lp, &p).map_err(e)?;
    let cfg = IntegratorConfig::rk4(5.0, 1e-3).sampled(0.05);
    let rep = cross_validate(&cart, &cl, &[0.2, 0.0, 0.0], &cfg, Tolerances::default()).map_err(e)?;
    let tr = integrate(&cart, &[0.2, 0.0, 0.0], &cfg).map_err(e)?;
    let mut ke = 0.0f64;
    for y in &tr.states {
        let v = sleigh_field(&lp, &p, &vec3(y[0], y[1], y[2])).map_err(e)?;
        ke = ke.max((p.kinetic(&v) - 0.5 * p.m * c0 * c0).abs());
    }
    Ok((
        pde <= 1e-10 && rep.sup_deviation <= 1e-5 && rep.compared_until >= 5.0 && ke <= 1e-10,
        format!("PDE residual {pde:.1e}; sup deviation {:.1e} over T = {}; |T - m C0^2/2| {ke:.1e}", rep.sup_deviation, rep.compared_until),
    ))
}

fn suslov_subcases() -> Outcome {
    let body = Inertia::new(2.0, 1.0, 1.5).map_err(e)?;
    let cases = [
        ("Suslov", body, ClosedForm::Suslov { c1: 0.7, c2: -0.4, alpha: 0.3, beta: 1.1 }),
        ("Kharlamova-Zabelina", body, ClosedForm::KharlamovaZabelina { h_tilde: 0.01, c1: 0.1, c2: 0.05, c: 0.02, shift: 0.0, u0: 0.5 }),
        ("Kozlov", Inertia::new(4.0, 4.0, 3.0).map_err(e)?, ClosedForm::Kozlov { h: 1.5, c: 0.3, g3_0: 0.6, x0: 0.2 }),
        ("Tisserand", body, ClosedForm::Tisserand { a1: 1.0, a2: 1.0, b1: 0.9, b2: 0.95, h1: -0.98, h2: -0.99, phi1: -0.6, phi2: 0.1 }),
    ];
    let h = 0.25;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, inertia, cf) in cases {
        let mp = subcase_mu(&cf.spec(), &inertia).map_err(e)?;
        let u = mp.potential(&inertia, h);
        let path = cf.path(&inertia, cf.s_at_time(&inertia, 5.0).map_err(e)?, 101).map_err(e)?;
        let (mut res, mut k1, mut k2) = (0.0f64, 0.0f64, 0.0f64);
        for p in &path {
            res = res.max(cf.ode_residual(&inertia, p.s, h).map_err(e)?);
            let (a, b) = suslov_first_integrals(&inertia, &u, &p.state).map_err(e)?;
            k1 = k1.max((a - h).abs());
            k2 = k2.max((b - 1.0).abs());
        }
        let cl = SuslovClassical::new(inertia, mp, h);
        let tr = integrate(&cl, &cl.initial_state(path[0].state.gamma.as_slice()).map_err(e)?, &IntegratorConfig::rk4(5.0, 1e-3)).map_err(e)?;
        let mut dev = 0.0f64;
        for p in &path {
            let y = tr.interpolate(p.t).map_err(e)?;
            dev = dev.max((vec3(y[2], y[3], y[4]) - p.state.gamma).amax()).max((y[0] - p.state.omega[0]).abs()).max((y[1] - p.state.omega[1]).abs());
        }
        let d = drift_report(&tr, &cl.invariants());
        let k1n = d.get("K1").ok_or("no K1")?.max_abs;
        let pass = res <= 1e-8 && k2 <= 1e-9 && k1 <= 1e-8 && k1n <= 1e-8 && dev <= 1e-5;
        ok &= pass;
        parts.push(format!("{name}: residual {res:.1e}, K2 {k2:.1e}, K1 {:.1e}, deviation {dev:.1e}", k1.max(k1n)));
    }
    Ok((ok, parts.join("; ")))
}

fn veselov() -> Outcome {
    let i = Inertia::new(1.0, 1.0, 1.6).map_err(e)?;
    let c: Fn1 = Arc::new(|z: f64| 0.4 + 0.1 * z);
    let (mut cond, mut inv) = (0.0f64, 0.0f64);
    for a in [0.0, 0.3] {
        let sv = SymmetricVeselov::new(i, a, c.clone(), Arc::new(|x: f64| 0.8 + 0.2 * x.sin())).map_err(e)?;
        for q in halton_box(100, vec3(-PI, 0.0, 0.3), vec3(PI, 0.0, PI - 0.3), 9) {
            cond = cond.max(veselov_condition_residual(&sv.spec, &EulerState::from_vec(&q)).map_err(e)?.abs());
        }
        let flow = AngleFlow::veselov(&sv.spec);
        let tr = integrate(&flow, &[0.3, 0.0, 1.2], &IntegratorConfig::rk4(10.0, 1e-3).sampled(0.05)).map_err(e)?;
        let mut vals = Vec::new();
        for y in &tr.states {
            let es = EulerState::new(y[0], y[1], y[2]);
            vals.push(sv.invariant(&es, &veselov_omega_integrals(&sv.spec, &es).map_err(e)?).map_err(e)?);
        }
        inv = inv.max(vals.iter().map(|v| (v - vals[0]).abs()).fold(0.0, f64::max));
    }
    // a = 0, K constant: the classical body keeps Q(gamma3) omega3^2 fixed
    let sv = SymmetricVeselov::new(i, 0.0, c, Arc::new(|_| 0.8)).map_err(e)?;
    let cl = VeselovClassical::new(sv.spec.clone(), 0.0);
    let tr = integrate(&cl, &cl.initial_state(&[0.3, 0.0, 1.2]).map_err(e)?, &IntegratorConfig::rk4(3.0, 1e-3).sampled(0.05)).map_err(e)?;
    let integral = |y: &Vec<f64>| {
        let g3 = y[5] / vec3(y[3], y[4], y[5]).norm();
        (i.i3 * (1.0 - g3 * g3) + i.i1 * g3 * g3) * y[2] * y[2]
    };
    let v0 = integral(&tr.states[0]);
    let vd = tr.states.iter().map(|y| (integral(y) - v0).abs()).fold(0.0, f64::max);
    Ok((
        cond <= 1e-6 && inv <= 1e-7 && vd <= 1e-7 && tr.completed(),
        format!("condition residual {cond:.1e}; invariant drift {inv:.1e} (a = 0, 0.3, T = 10); a = 0 integral drift {vd:.1e} (classical, T = {})", tr.t_final()),
    ))
}

fn integrator_and_determinism() -> Outcome {
    let x0 = vec3(1.0, 0.0, 0.3);
    let t: f64 = 2.0;
    let exact = vec3(t.cos(), -t.sin(), 0.3);
    let err = |h: f64| -> Result<f64, String> {
        let tr = integrate_first_order(|x| Ok(vec3(x[1], -x[0], 0.0)), &x0, &IntegratorConfig::rk4(t, h)).map_err(e)?;
        let y = tr.last();
        Ok((vec3(y[0], y[1], y[2]) - exact).norm())
    };
    let ratio = err(0.1)? / err(0.05)?;
    let text = "system = suslov-kz\nparams.I = [2, 1, 1.5]\nparams.htilde = 0.01\nparams.C = [0.1, 0.05]\nparams.c = 0.02\n\
                initial = [0.1, 0.05, 0.99]\nt_end = 2\nseed = 7\npoints = 100\noutputs = [trajectory, invariants, certificate]\n";
    let scn = Scenario::from_text("det", text).map_err(e)?;
    let dir = tempfile::tempdir().map_err(e)?;
    let mut files = Vec::new();
    for sub in ["a", "b"] {
        run(&scn, &dir.path().join(sub), false);
        let read = |f: &str| fs::read(dir.path().join(sub).join("det").join(f)).map_err(e);
        files.push((read("trajectory.csv")?, read("certificate.csv")?));
    }
    let same = files[0] == files[1] && !files[0].0.is_empty() && !files[0].1.is_empty();
    Ok(((12.0..=20.0).contains(&ratio) && same, format!("RK4 error ratio {ratio:.2}; CSV byte-identical across runs: {same}")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("vector-calculus identities", vector_identities),
        ("Cartesian certificate on the sphere", sphere_certificate),
        ("geodesic flows", geodesics),
        ("homogeneous-surface integral", homogeneous),
        ("Kepler reduction", kepler),
        ("curvature and principal directions", curvature),
        ("Chaplygin sleigh", sleigh),
        ("Suslov subcases", suslov_subcases),
        ("Veselov symmetric case", veselov),
        ("integrator order and determinism", integrator_and_determinism),
    ];
    let mut failed = 0;
    for (n, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = f().unwrap_or_else(|m| (false, format!("error: {m}")));
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {:>2} {}  {title}: {detail} [{secs:.1}s]", n + 1, if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
