//! Named systems: parameter schemas and builders for the Cartesian flow,
//! its classical counterpart, a Cartesian-condition check and, where one
//! exists, an exact reference solution.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use descartes_core::cartesian::{Constraint, MetricFn};
use descartes_core::engine::{FieldFormulation, Formulation, Monitor};
use descartes_core::nonholo::{self, Fn1, Fn2, LambdaPair, ParticleSystem, SleighParams};
use descartes_core::poly::Poly3;
use descartes_core::rigidbody::{
    self, AngleFlow, ClosedForm, EulerState, Inertia, SubcaseSpec, SuslovCartesian, SuslovClassical, SymmetricVeselov,
    VeselovClassical,
};
use descartes_core::sampling::halton_box;
use descartes_core::surfaces::{self, GeodesicSystem, HomogeneousSurface, KeplerClassical, KeplerSurface, LevelSurface, Scaling};
use descartes_core::veccalc::jacobian;
use descartes_core::{ScalarField, Vec3, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Scalar,
    Vector(usize),
}

impl ParamKind {
    pub fn describe(self) -> String {
        match self {
            Self::Scalar => "a number".into(),
            Self::Vector(n) => format!("an array of {n} values"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub required: bool,
    /// Default for optional parameters; sample value for required ones.
    pub example: &'static [f64],
    pub help: &'static str,
}

const fn req(name: &'static str, kind: ParamKind, example: &'static [f64], help: &'static str) -> ParamSpec {
    ParamSpec { name, kind, required: true, example, help }
}

const fn opt(name: &'static str, kind: ParamKind, example: &'static [f64], help: &'static str) -> ParamSpec {
    ParamSpec { name, kind, required: false, example, help }
}

use ParamKind::{Scalar as S, Vector as V};

pub type Sampler = Arc<dyn Fn(usize, u64) -> Vec<Vec3> + Send + Sync>;
pub type PointResidual = Arc<dyn Fn(&Vec3) -> descartes_core::Result<f64> + Send + Sync>;
/// (initial state, t_end) to reference samples (t, position).
pub type Oracle = Arc<dyn Fn(&[f64], f64) -> descartes_core::Result<Vec<(f64, Vec<f64>)>> + Send + Sync>;
pub type Prepare = Arc<dyn Fn(&[f64]) -> descartes_core::Result<Vec<f64>> + Send + Sync>;

/// How a system's field is checked against the Cartesian condition.
#[derive(Clone)]
pub enum Check {
    /// Full certificate of the field against its constraint.
    Certificate { field: VectorField, constraint: Constraint, metric: Option<MetricFn>, sampler: Sampler },
    /// A scalar residual that vanishes for Cartesian fields of the family.
    Residual { name: &'static str, residual: PointResidual, sampler: Sampler },
}

pub struct System {
    pub cartesian: Box<dyn Formulation>,
    pub classical: Option<Box<dyn Formulation>>,
    pub state_labels: [&'static str; 3],
    pub position_labels: [&'static str; 3],
    /// Moves a configured initial state onto the invariant manifold.
    pub prepare: Prepare,
    pub check: Check,
    pub oracle: Option<Oracle>,
}

pub struct SystemInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    pub state: &'static str,
    pub state_len: usize,
    pub example_initial: &'static [f64],
    pub classical: bool,
    pub oracle: bool,
    build: fn(&Params) -> Result<System, String>,
}

impl SystemInfo {
    /// Parameters with optional ones filled from their defaults.
    pub fn resolve(&self, given: &BTreeMap<String, Vec<f64>>) -> Params {
        let mut p = BTreeMap::new();
        for spec in self.params {
            let v = given.get(spec.name).cloned().unwrap_or_else(|| spec.example.to_vec());
            p.insert(spec.name.to_string(), v);
        }
        Params(p)
    }

    /// All parameters at their example values.
    pub fn example_params(&self) -> Params {
        self.resolve(&BTreeMap::new())
    }

    pub fn build(&self, p: &Params) -> Result<System, String> {
        (self.build)(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params(pub BTreeMap<String, Vec<f64>>);

impl Params {
    fn get(&self, k: &str) -> &[f64] {
        self.0.get(k).map(Vec::as_slice).unwrap_or_else(|| panic!("parameter `{k}` missing from schema"))
    }

    fn s(&self, k: &str) -> f64 {
        self.get(k)[0]
    }

    fn v3(&self, k: &str) -> Vec3 {
        let v = self.get(k);
        Vec3::new(v[0], v[1], v[2])
    }

    fn pair(&self, k: &str) -> (f64, f64) {
        let v = self.get(k);
        (v[0], v[1])
    }
}

fn err(e: descartes_core::Error) -> String {
    e.to_string()
}

fn pt(y: &[f64]) -> Vec3 {
    Vec3::new(y[0], y[1], y[2])
}

fn nan_field(f: impl Fn(&Vec3) -> descartes_core::Result<Vec3> + Send + Sync + 'static) -> VectorField {
    VectorField::new(move |x| f(x).unwrap_or_else(|_| Vec3::repeat(f64::NAN)))
}

/// First `n` points of a seeded Halton cloud in [lo, hi] that survive `keep`.
fn cloud(lo: Vec3, hi: Vec3, keep: impl Fn(Vec3) -> Option<Vec3> + Send + Sync + 'static) -> Sampler {
    Arc::new(move |n, seed| halton_box(40 * n.max(1), lo, hi, seed).into_iter().filter_map(&keep).take(n).collect())
}

fn identity_prepare() -> Prepare {
    Arc::new(|x| Ok(x.to_vec()))
}

fn onto(surface: LevelSurface) -> Prepare {
    Arc::new(move |x| surface.project(&pt(x)).map(|p| p.as_slice().to_vec()))
}

const X: [&str; 3] = ["x1", "x2", "x3"];
const SLEIGH: [&str; 3] = ["x", "y", "z"];
const GAMMA: [&str; 3] = ["gamma1", "gamma2", "gamma3"];
const EULER: [&str; 3] = ["x", "y", "z"];

// ---------------------------------------------------------------- particle

fn linear(c: (f64, f64)) -> Fn1 {
    Arc::new(move |x| c.0 + c.1 * x)
}

fn build_rosenberg(p: &Params) -> Result<System, String> {
    let (u, h, sign) = (p.v3("U"), p.s("h"), p.s("sign"));
    if sign.abs() != 1.0 {
        return Err("params.sign must be 1 or -1".into());
    }
    let pot: Fn1 = Arc::new(move |x| u[0] + u[1] * x + u[2] * x * x);
    let ps = ParticleSystem::energy_consistent(linear(p.pair("ahat")), pot.clone(), p.s("A"), h, sign);
    let field = {
        let ps = ps.clone();
        VectorField::new(move |x| nonholo::rosenberg_field(&ps, x))
    };
    let sampler = cloud(Vec3::repeat(-1.0), Vec3::repeat(1.0), move |x| (pot(x[2]) + h > 0.05).then_some(x));
    Ok(System {
        cartesian: Box::new(nonholo::rosenberg_cartesian(&ps)),
        classical: Some(Box::new(nonholo::rosenberg_classical(&ps).map_err(err)?)),
        state_labels: X,
        position_labels: X,
        prepare: identity_prepare(),
        check: Check::Certificate { field, constraint: ps.constraint(), metric: None, sampler },
        oracle: None,
    })
}

fn sleigh_cloud() -> Sampler {
    cloud(Vec3::new(-PI, -2.0, -2.0), Vec3::new(PI, 2.0, 2.0), Some)
}

fn build_skate(p: &Params) -> Result<System, String> {
    let sp = SleighParams::new(p.s("m"), p.s("Jc"), 0.0).map_err(err)?;
    let (c0, c1, g) = (p.s("C0"), p.s("C1"), p.s("g"));
    if c0 == 0.0 {
        return Err("params.C0 = 0 freezes the heading; the flow needs C0 != 0".into());
    }
    // energy varies across the family of motions, so check the equations of
    // motion directly: M (Dv)v − F must be a multiple of the constraint
    let field = nan_field(move |s| nonholo::skate_gravity_flow(c0, c1, g, s));
    let (m, a) = (sp.mass_matrix(), sp.constraint());
    let residual: PointResidual = Arc::new(move |s| {
        let v = field.try_eval(s)?;
        let r = m * (jacobian(&field, s)? * v) - Vec3::new(0.0, sp.m * g, 0.0);
        let n = a.at(s)?;
        let minv = m.try_inverse().expect("positive masses");
        Ok((r - r.dot(&(minv * n)) / n.dot(&(minv * n)) * n).norm())
    });
    Ok(System {
        cartesian: Box::new(nonholo::skate_cartesian(&sp, c0, c1, g)),
        classical: Some(Box::new(nonholo::skate_classical(&sp, c0, c1, g).map_err(err)?)),
        state_labels: SLEIGH,
        position_labels: SLEIGH,
        prepare: identity_prepare(),
        check: Check::Residual { name: "motion residual", residual, sampler: sleigh_cloud() },
        oracle: None,
    })
}

fn build_sleigh(p: &Params) -> Result<System, String> {
    let sp = SleighParams::new(p.s("m"), p.s("Jc"), p.s("eps")).map_err(err)?;
    let lp = LambdaPair::inertial(&sp, p.s("C0"), p.s("C"));
    let field = {
        let lp = lp.clone();
        nan_field(move |s| nonholo::sleigh_field(&lp, &sp, s))
    };
    Ok(System {
        cartesian: Box::new(nonholo::sleigh_cartesian(&lp, &sp)),
        classical: Some(Box::new(nonholo::sleigh_classical(&lp, &sp).map_err(err)?)),
        state_labels: SLEIGH,
        position_labels: SLEIGH,
        prepare: identity_prepare(),
        check: Check::Certificate { field, constraint: sp.constraint(), metric: Some(sp.metric()), sampler: sleigh_cloud() },
        oracle: None,
    })
}

// ---------------------------------------------------------------- surfaces

fn quadric(a: Vec3) -> ScalarField {
    Poly3::new(vec![(0.5 * a[0], [2, 0, 0]), (0.5 * a[1], [0, 2, 0]), (0.5 * a[2], [0, 0, 2])]).to_field()
}

fn build_sphere(p: &Params) -> Result<System, String> {
    let r = p.s("R");
    if !(r > 0.0) {
        return Err("params.R must be positive".into());
    }
    geodesic(Vec3::repeat(1.0), 0.5 * r * r, p)
}

fn build_quadric_geodesic(p: &Params) -> Result<System, String> {
    let a = p.v3("a");
    if a.iter().any(|v| !(*v > 0.0)) || !(p.s("c") > 0.0) {
        return Err("params.a and params.c must be positive (an ellipsoid)".into());
    }
    geodesic(a, p.s("c"), p)
}

// Meridian geodesics on the ellipsoid (a1 x1^2 + a2 x2^2 + a3 x3^2)/2 = c
fn geodesic(a: Vec3, c: f64, p: &Params) -> Result<System, String> {
    let axis = p.v3("axis");
    if axis.norm() == 0.0 {
        return Err("params.axis must be non-zero".into());
    }
    let surface = LevelSurface::new(quadric(a), c).map_err(err)?;
    let phi = Poly3::new(vec![(axis[0], [1, 0, 0]), (axis[1], [0, 1, 0]), (axis[2], [0, 0, 1])]).to_field();
    let speed = p.s("speed");
    let sys = GeodesicSystem::new(surface.clone(), phi, Scaling::EnergyNormalized, surfaces::constant_profile(0.5 * speed * speed));
    let u = axis.normalize();
    let s2 = surface.clone();
    let ext = Vec3::new(1.0 / a[0].sqrt(), 1.0 / a[1].sqrt(), 1.0 / a[2].sqrt()) * (2.0 * c).sqrt();
    let scale = ext.max();
    let sampler = cloud(-ext, ext, move |x| {
        let y = s2.project(&x).ok()?;
        // the meridian field degenerates where the normal is parallel to the axis
        let n = s2.normal(&y).ok()?.normalize();
        (x.norm() > 0.1 * scale && n.cross(&u).norm() > 0.05).then_some(y)
    });
    Ok(System {
        cartesian: Box::new(surfaces::geodesic_cartesian(&sys)),
        classical: Some(Box::new(surfaces::geodesic_classical(&sys).map_err(err)?)),
        state_labels: X,
        position_labels: X,
        prepare: onto(surface),
        check: Check::Certificate { field: sys.vector_field(), constraint: Constraint::from_gradient(&sys.surface.f), metric: None, sampler },
        oracle: None,
    })
}

fn build_homogeneous(p: &Params) -> Result<System, String> {
    let a = p.v3("a");
    if a.iter().any(|v| !(*v > 0.0)) {
        return Err("params.a must be positive (an ellipsoid)".into());
    }
    let surface = LevelSurface::new(quadric(a), p.s("c")).map_err(err)?;
    let hs = HomogeneousSurface::new(surface.clone(), 2.0);
    let (h0, h1) = p.pair("h");
    let h: surfaces::Profile = Arc::new(move |f| h0 + h1 * f);
    let field = {
        let (hs, h) = (hs.clone(), h.clone());
        nan_field(move |x| surfaces::homogeneous_cartesian_field(&hs, &h, x))
    };
    let (s2, ext) = (surface.clone(), Vec3::new(1.0 / a[0].sqrt(), 1.0 / a[1].sqrt(), 1.0 / a[2].sqrt()) * (2.0 * p.s("c")).abs().sqrt());
    let sampler = cloud(-ext, ext, move |x| s2.project(&x).ok());
    Ok(System {
        cartesian: Box::new(surfaces::homogeneous_cartesian(&hs, &h)),
        classical: None,
        state_labels: X,
        position_labels: X,
        prepare: onto(surface.clone()),
        check: Check::Certificate { field, constraint: Constraint::from_gradient(&surface.f), metric: None, sampler },
        oracle: None,
    })
}

fn build_kepler(p: &Params) -> Result<System, String> {
    let ks = KeplerSurface::new(p.v3("b"), p.v3("c")).map_err(err)?;
    // the flow lives in the orbit plane, so differentiate along it only
    let residual: PointResidual = Arc::new(move |x| {
        let v = surfaces::kepler_surface_flow(&ks, x)?;
        let d = 1e-4;
        let acc = (surfaces::kepler_surface_flow(&ks, &(x + d * v))? - surfaces::kepler_surface_flow(&ks, &(x - d * v))?) / (2.0 * d);
        Ok((acc + x / x.norm().powi(3)).norm())
    });
    let sampler = cloud(Vec3::repeat(-1.0), Vec3::repeat(1.0), move |u| ks.point_towards(&u).ok());
    Ok(System {
        cartesian: Box::new(surfaces::kepler_cartesian(&ks)),
        classical: Some(Box::new(KeplerClassical { ks })),
        state_labels: X,
        position_labels: X,
        prepare: Arc::new(move |x| ks.point_towards(&pt(x)).map(|p| p.as_slice().to_vec())),
        check: Check::Residual { name: "x'' + x/r^3", residual, sampler },
        oracle: None,
    })
}

fn build_cubic(p: &Params) -> Result<System, String> {
    let (l, q, nu) = (p.v3("linear"), p.v3("quadratic"), p.s("nu"));
    let phi = Poly3::new(vec![
        (l[0], [1, 0, 0]),
        (l[1], [0, 1, 0]),
        (l[2], [0, 0, 1]),
        (q[0], [2, 0, 0]),
        (q[1], [0, 2, 0]),
        (q[2], [0, 0, 2]),
    ])
    .to_field();
    let nu = ScalarField::constant(nu);
    let (phi2, nu2) = (phi.clone(), nu.clone());
    let cartesian = FieldFormulation::new(move |x| surfaces::cubic_surface_field(&phi, &nu, x))
        .with_invariant(Monitor::new("x1x2x3", |y| y[0] * y[1] * y[2]));
    let residual: PointResidual = Arc::new(move |x| {
        let v = surfaces::cubic_surface_field(&phi2, &nu2, x)?;
        Ok(Vec3::new(x[1] * x[2], x[0] * x[2], x[0] * x[1]).dot(&v).abs())
    });
    let sampler = cloud(Vec3::repeat(-1.5), Vec3::repeat(1.5), |x| x.iter().all(|c| c.abs() > 0.1).then_some(x));
    Ok(System {
        cartesian: Box::new(cartesian),
        classical: None,
        state_labels: X,
        position_labels: X,
        prepare: identity_prepare(),
        check: Check::Residual { name: "tangency (grad(x1x2x3), v)", residual, sampler },
        oracle: None,
    })
}

// ---------------------------------------------------------------- rigid body

fn inertia(p: &Params) -> Result<Inertia, String> {
    let i = p.v3("I");
    Inertia::new(i[0], i[1], i[2]).map_err(err)
}

fn unit_gamma() -> Prepare {
    Arc::new(|x| {
        let g = pt(x);
        if g.norm() == 0.0 {
            return Err(descartes_core::Error::InvalidInput("initial gamma is zero".into()));
        }
        Ok(g.normalize().as_slice().to_vec())
    })
}

fn sphere_cloud(mu: rigidbody::MuPair, upper: bool) -> Sampler {
    cloud(Vec3::repeat(-1.0), Vec3::repeat(1.0), move |x| {
        if x.norm() < 0.1 {
            return None;
        }
        let g = x.normalize();
        // keep clear of radicand boundaries, where difference quotients blow up
        let finite_near = (0..3).all(|k| {
            [-2e-3, 2e-3].iter().all(|d| {
                let mut q = g;
                q[k] += d;
                mu.mu1.try_eval(&q).is_ok() && mu.mu2.try_eval(&q).is_ok()
            })
        });
        let ok = (!upper || g[2] > 0.05) && (g[0] * g[0] + g[1] * g[1]) > 1e-2 && finite_near;
        ok.then_some(g)
    })
}

fn suslov_system(p: &Params, spec: SubcaseSpec, upper: bool, oracle: Option<Oracle>) -> Result<System, String> {
    let i = inertia(p)?;
    let mu = rigidbody::subcase_mu(&spec, &i).map_err(err)?;
    let h = p.s("energy");
    let m2 = mu.clone();
    let residual: PointResidual = Arc::new(move |g| rigidbody::mu_pde_residual(&m2, g).map(f64::abs));
    Ok(System {
        cartesian: Box::new(SuslovCartesian { inertia: i, mu: mu.clone(), h }),
        classical: Some(Box::new(SuslovClassical::new(i, mu.clone(), h))),
        state_labels: GAMMA,
        position_labels: GAMMA,
        prepare: unit_gamma(),
        check: Check::Residual { name: "mu equation", residual, sampler: sphere_cloud(mu, upper) },
        oracle,
    })
}

fn closed_form_oracle(spec: SubcaseSpec, i: Inertia) -> Oracle {
    Arc::new(move |x0, t_end| {
        let cf = ClosedForm::from_initial(&spec, &i, &pt(x0))?;
        let s_end = cf.s_at_time(&i, t_end)?;
        Ok(cf.path(&i, s_end, 201)?.into_iter().map(|p| (p.t, p.state.gamma.as_slice().to_vec())).collect())
    })
}

fn build_suslov(p: &Params) -> Result<System, String> {
    let (c1, c2) = p.pair("C");
    let spec = SubcaseSpec::Suslov { c1, c2 };
    suslov_system(p, spec.clone(), false, Some(closed_form_oracle(spec, inertia(p)?)))
}

fn build_kz(p: &Params) -> Result<System, String> {
    let (c1, c2) = p.pair("C");
    let spec = SubcaseSpec::KharlamovaZabelina { h_tilde: p.s("htilde"), c1, c2, c: p.s("c") };
    suslov_system(p, spec.clone(), true, Some(closed_form_oracle(spec, inertia(p)?)))
}

fn build_kozlov(p: &Params) -> Result<System, String> {
    let spec = SubcaseSpec::Kozlov { h: p.s("h"), c: p.s("C") };
    suslov_system(p, spec.clone(), true, Some(closed_form_oracle(spec, inertia(p)?)))
}

fn build_tisserand(p: &Params) -> Result<System, String> {
    let ((a1, a2), (b1, b2), (h1, h2)) = (p.pair("a"), p.pair("b"), p.pair("h"));
    let spec = SubcaseSpec::Tisserand { a1, a2, b1, b2, h1, h2, f1: None, f2: None };
    suslov_system(p, spec.clone(), true, Some(closed_form_oracle(spec, inertia(p)?)))
}

/// √P(r, g) with P = k₀ + k₁r + k₂g + k₃r² + k₄rg + k₅g².
fn radicand(k: Vec<f64>) -> Fn2 {
    Arc::new(move |r, g| (k[0] + k[1] * r + k[2] * g + k[3] * r * r + k[4] * r * g + k[5] * g * g).sqrt())
}

fn build_separable(p: &Params) -> Result<System, String> {
    let i = inertia(p)?;
    let (psi1, psi2) = (radicand(p.get("psi1").to_vec()), radicand(p.get("psi2").to_vec()));
    let spec = SubcaseSpec::Separable { psi1: psi1.clone(), psi2: psi2.clone() };
    // on the unit sphere μ_j depends on γ_j alone
    let f1: Fn1 = Arc::new(move |g| psi1(1.0 - g * g, g));
    let f2: Fn1 = Arc::new(move |g| psi2(1.0 - g * g, g));
    let oracle: Oracle = Arc::new(move |x0, t_end| {
        // t grows at least as fast as I₁I₂ τ, so this τ range reaches t_end
        let tau_end = t_end / (i.i1 * i.i2);
        let path = rigidbody::separable_quadrature(&f1, &f2, &i, (x0[0], x0[1]), tau_end, 201)?;
        if x0[2] < 0.0 {
            return Err(descartes_core::Error::Domain("the quadrature covers gamma3 > 0".into()));
        }
        Ok(path.times.iter().zip(&path.gamma).filter(|(t, _)| **t <= t_end).map(|(t, g)| (*t, g.as_slice().to_vec())).collect())
    });
    suslov_system(p, spec, true, Some(oracle))
}

fn veselov_system(p: &Params, a: f64, classical: bool) -> Result<System, String> {
    let i = inertia(p)?;
    let (c, k) = (linear(p.pair("C")), p.pair("K"));
    let kf: Fn1 = Arc::new(move |x| k.0 + k.1 * x.sin());
    let sv = SymmetricVeselov::new(i, a, c, kf).map_err(err)?;
    let sv2 = sv.clone();
    let flow = AngleFlow::veselov(&sv.spec).with_invariant(Monitor::new("Q(w3+a g3)^2-(aW+K)^2", move |y| {
        let e = EulerState::new(y[0], y[1], y[2]);
        rigidbody::veselov_omega_integrals(&sv2.spec, &e).and_then(|w| sv2.invariant(&e, &w)).unwrap_or(f64::NAN)
    }));
    let spec = sv.spec.clone();
    let residual: PointResidual = Arc::new(move |e| rigidbody::veselov_condition_residual(&spec, &EulerState::from_vec(e)).map(f64::abs));
    let sampler = cloud(Vec3::new(-PI, 0.0, 0.3), Vec3::new(PI, 0.0, PI - 0.3), Some);
    Ok(System {
        cartesian: Box::new(flow),
        classical: if classical { Some(Box::new(VeselovClassical::new(sv.spec.clone(), p.s("energy")))) } else { None },
        state_labels: EULER,
        position_labels: GAMMA,
        prepare: identity_prepare(),
        check: Check::Residual { name: "Veselov condition", residual, sampler },
        oracle: None,
    })
}

fn build_veselov(p: &Params) -> Result<System, String> {
    veselov_system(p, 0.0, true)
}

fn build_fedorov(p: &Params) -> Result<System, String> {
    veselov_system(p, p.s("a"), false)
}

// ---------------------------------------------------------------- registry

const SUSLOV_I: ParamSpec = req("I", V(3), &[2.0, 1.0, 1.5], "principal moments I1, I2, I3");
const SYM_I: ParamSpec = req("I", V(3), &[4.0, 4.0, 3.0], "principal moments with I1 = I2");
const ENERGY: ParamSpec = opt("energy", S, &[0.0], "energy level h of the classical force function");
const VESELOV_I: ParamSpec = req("I", V(3), &[1.0, 1.0, 1.6], "principal moments with I1 = I2");

static CATALOG: [SystemInfo; 15] = [
    SystemInfo {
        name: "rosenberg",
        summary: "particle with x1' + ahat(x3) x2' = 0 and force function U(x3)",
        params: &[
            req("A", S, &[0.8], "momentum constant: x2' sqrt(1 + ahat^2) = -A"),
            opt("ahat", V(2), &[0.0, 0.5], "ahat(x3) = a0 + a1 x3"),
            opt("U", V(3), &[0.0, -0.5, 0.0], "U(x3) = u0 + u1 x3 + u2 x3^2"),
            opt("h", S, &[2.0], "energy constant: x3' = -sign sqrt(2(U + h))"),
            opt("sign", S, &[-1.0], "branch of x3', +1 or -1"),
        ],
        state: "position [x1, x2, x3]",
        state_len: 3,
        example_initial: &[0.0, 0.0, 0.3],
        classical: true,
        oracle: false,
        build: build_rosenberg,
    },
    SystemInfo {
        name: "chaplygin-skate",
        summary: "skate (eps = 0) on an inclined plane with gravity g along y",
        params: &[
            opt("m", S, &[1.0], "mass"),
            opt("Jc", S, &[0.5], "moment of inertia about the contact point"),
            req("C0", S, &[1.0], "constant heading rate x'"),
            opt("C1", S, &[0.0], "speed offset"),
            opt("g", S, &[9.8], "gravity"),
        ],
        state: "configuration [x (heading), y, z]",
        state_len: 3,
        example_initial: &[0.3, 0.0, 0.0],
        classical: true,
        oracle: false,
        build: build_skate,
    },
    SystemInfo {
        name: "chaplygin-sleigh",
        summary: "Chaplygin-Caratheodory sleigh moving by inertia on the closed-form lambda pair",
        params: &[
            opt("m", S, &[1.5], "mass"),
            opt("Jc", S, &[0.7], "moment of inertia about the centre of mass"),
            opt("eps", S, &[0.4], "offset of the knife edge"),
            req("C0", S, &[1.2], "amplitude of the lambda pair"),
            opt("C", S, &[0.3], "phase of the lambda pair"),
        ],
        state: "configuration [x (heading), y, z]",
        state_len: 3,
        example_initial: &[0.2, 0.0, 0.0],
        classical: true,
        oracle: false,
        build: build_sleigh,
    },
    SystemInfo {
        name: "sphere-geodesic",
        summary: "meridian geodesics of the sphere |x| = R generated by Phi = (axis, x)",
        params: &[
            opt("R", S, &[1.0], "radius"),
            opt("axis", V(3), &[0.0, 0.0, 1.0], "Phi = (axis, x)"),
            opt("speed", S, &[0.1], "constant speed"),
        ],
        state: "point [x1, x2, x3], projected onto the sphere",
        state_len: 3,
        example_initial: &[0.5, 0.6, -0.4],
        classical: true,
        oracle: false,
        build: build_sphere,
    },
    SystemInfo {
        name: "quadric-geodesic",
        summary: "meridian geodesics of the ellipsoid (a1 x1^2 + a2 x2^2 + a3 x3^2)/2 = c generated by Phi = (axis, x)",
        params: &[
            opt("a", V(3), &[1.0, 1.0, 4.0], "semi-axis weights, all positive"),
            opt("c", S, &[0.5], "level of f"),
            opt("axis", V(3), &[0.0, 0.0, 1.0], "Phi = (axis, x)"),
            opt("speed", S, &[0.1], "constant speed"),
        ],
        state: "point [x1, x2, x3], projected onto the ellipsoid",
        state_len: 3,
        example_initial: &[0.5, 0.6, -0.2],
        classical: true,
        oracle: false,
        build: build_quadric_geodesic,
    },
    SystemInfo {
        name: "homogeneous-quadric",
        summary: "flow of the homogeneous-surface field on f = (a1 x1^2 + a2 x2^2 + a3 x3^2)/2 = c",
        params: &[
            opt("a", V(3), &[1.0, 1.0, 4.0], "quadric coefficients"),
            opt("c", S, &[0.5], "level"),
            opt("h", V(2), &[2e-4, 0.0], "energy profile h(f) = h0 + h1 f"),
        ],
        state: "point [x1, x2, x3], projected onto the level set",
        state_len: 3,
        example_initial: &[0.5, 0.6, 0.4],
        classical: false,
        oracle: false,
        build: build_homogeneous,
    },
    SystemInfo {
        name: "kepler-surface",
        summary: "sigma-time Kepler flow on the conic r + (b, x) = |c|^2, (x, c) = 0",
        params: &[
            req("b", V(3), &[0.5, 0.2, 0.0], "eccentricity vector, |b| < 1 and (b, c) = 0"),
            req("c", V(3), &[0.0, 0.0, 1.1], "angular momentum vector, non-zero"),
        ],
        state: "direction [u1, u2, u3]; the orbit point along it is used",
        state_len: 3,
        example_initial: &[1.0, 0.3, 0.0],
        classical: true,
        oracle: false,
        build: build_kepler,
    },
    SystemInfo {
        name: "cubic-surface",
        summary: "field nu grad Phi(xi, eta, zeta) tangent to the levels of x1 x2 x3",
        params: &[
            opt("linear", V(3), &[0.3, -0.2, 0.1], "Phi coefficients of xi, eta, zeta"),
            opt("quadratic", V(3), &[0.1, 0.2, -0.1], "Phi coefficients of xi^2, eta^2, zeta^2"),
            opt("nu", S, &[1.0], "constant scaling nu"),
        ],
        state: "point [x1, x2, x3] off the coordinate planes",
        state_len: 3,
        example_initial: &[0.8, 0.9, 1.1],
        classical: false,
        oracle: false,
        build: build_cubic,
    },
    SystemInfo {
        name: "suslov",
        summary: "Suslov problem, constant mu = (C1, C2): uniform rotation of gamma",
        params: &[SUSLOV_I, opt("C", V(2), &[0.7, -0.4], "mu = (C1, C2)"), ENERGY],
        state: "Poisson vector gamma, normalized",
        state_len: 3,
        example_initial: &[0.3, 0.5, 0.812],
        classical: true,
        oracle: true,
        build: build_suslov,
    },
    SystemInfo {
        name: "suslov-kz",
        summary: "Suslov problem, Kharlamova-Zabelina subcase (gamma3 > 0)",
        params: &[
            SUSLOV_I,
            req("htilde", S, &[0.01], "shift in W = htilde + C1 g1 + C2 g2"),
            req("C", V(2), &[0.1, 0.05], "C1, C2"),
            req("c", S, &[0.02], "constant C of the correction term"),
            ENERGY,
        ],
        state: "Poisson vector gamma with gamma3 > 0, normalized",
        state_len: 3,
        example_initial: &[0.1, 0.05, 0.99],
        classical: true,
        oracle: true,
        build: build_kz,
    },
    SystemInfo {
        name: "suslov-kozlov",
        summary: "Suslov problem, Kozlov subcase for I1 = I2",
        params: &[SYM_I, req("h", S, &[1.5], "h in D^2 u^2 = h u^2 + gamma3 u - C^2"), req("C", S, &[0.3], "C"), ENERGY],
        state: "Poisson vector gamma, normalized",
        state_len: 3,
        example_initial: &[0.159, 0.784, 0.6],
        classical: true,
        oracle: true,
        build: build_kozlov,
    },
    SystemInfo {
        name: "suslov-tisserand",
        summary: "Suslov problem, Tisserand subcase with f1 = f2 = 0",
        params: &[
            SUSLOV_I,
            req("a", V(2), &[1.0, 1.0], "a1, a2"),
            req("b", V(2), &[0.9, 0.95], "b1, b2 (b_j < a_j)"),
            req("h", V(2), &[-0.98, -0.99], "h1, h2"),
            ENERGY,
        ],
        state: "Poisson vector gamma with gamma3 > 0, normalized",
        state_len: 3,
        example_initial: &[-0.08, 0.03, 0.996],
        classical: true,
        oracle: true,
        build: build_tisserand,
    },
    SystemInfo {
        name: "suslov-separable",
        summary: "Suslov problem with separable mu_j = sqrt(P_j(r, gamma_j)), solved by quadrature",
        params: &[
            SUSLOV_I,
            req("psi1", V(6), &[0.02, 0.0, 0.0, 0.0, 0.0, -0.1], "P1 coefficients of 1, r, g, r^2, r g, g^2 with r = g2^2 + g3^2, g = g1"),
            req("psi2", V(6), &[0.01, 0.0, 0.0, 0.0, 0.0, -0.05], "P2 coefficients, r = g1^2 + g3^2, g = g2"),
            ENERGY,
        ],
        state: "Poisson vector gamma with gamma3 > 0, normalized",
        state_len: 3,
        example_initial: &[-0.08, 0.03, 0.996],
        classical: true,
        oracle: true,
        build: build_separable,
    },
    SystemInfo {
        name: "veselov",
        summary: "Veselov problem (gamma, omega) = 0, symmetric closed form",
        params: &[
            VESELOV_I,
            opt("C", V(2), &[0.4, 0.1], "C(z) = C0 + C1 z"),
            opt("K", V(2), &[0.8, 0.2], "K(x) = K0 + K1 sin x"),
            ENERGY,
        ],
        state: "Euler angles [x, y, z], 0 < z < pi",
        state_len: 3,
        example_initial: &[0.3, 0.0, 1.2],
        classical: true,
        oracle: false,
        build: build_veselov,
    },
    SystemInfo {
        name: "veselov-fedorov",
        summary: "Fedorov extension (gamma, omega) = -a of the symmetric Veselov solution",
        params: &[
            VESELOV_I,
            req("a", S, &[0.3], "constraint value"),
            opt("C", V(2), &[0.4, 0.1], "C(z) = C0 + C1 z"),
            opt("K", V(2), &[0.8, 0.2], "K(x) = K0 + K1 sin x"),
        ],
        state: "Euler angles [x, y, z], 0 < z < pi",
        state_len: 3,
        example_initial: &[0.3, 0.0, 1.2],
        classical: false,
        oracle: false,
        build: build_fedorov,
    },
];

pub fn catalog() -> &'static [SystemInfo] {
    &CATALOG
}

pub fn lookup(name: &str) -> Option<&'static SystemInfo> {
    CATALOG.iter().find(|s| s.name == name)
}

/// Closest catalog name, if any is reasonably close.
pub fn suggest(name: &str) -> Option<&'static str> {
    if let Some(s) = CATALOG.iter().find(|s| !name.is_empty() && s.name.starts_with(name)) {
        return Some(s.name);
    }
    CATALOG
        .iter()
        .map(|s| (strsim::damerau_levenshtein(name, s.name), s.name))
        .filter(|(d, n)| *d <= 3.max(n.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, n)| n)
}
