//! Geodesic flows on implicit surfaces f(x) = c built as Cartesian fields,
//! homogeneous-surface integrals, curvature of level sets, and the quadric,
//! cubic and Kepler catalogs.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};

use crate::engine::{ConstrainedFormulation, ConstrainedSystem, FieldFormulation, Formulation, Monitor, OdeSystem};
use crate::error::{arr, Error, Result};
use crate::poly::Poly3;
use crate::veccalc::{adjugate, curl, grad, hessian, jacobian, Mat3, ScalarField, Vec3, VectorField};

/// Energy profile h(f).
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn constant_profile(h: f64) -> Profile {
    Arc::new(move |_| h)
}

/// Level set f(x) = c.
#[derive(Debug, Clone)]
pub struct LevelSurface {
    pub f: ScalarField,
    pub c: f64,
}

impl LevelSurface {
    pub fn new(f: ScalarField, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::InvalidInput("level c must be finite and non-zero".into()));
        }
        Ok(Self { f, c })
    }

    /// ∇f(x), rejecting critical points.
    pub fn normal(&self, x: &Vec3) -> Result<Vec3> {
        let n = grad(&self.f, x)?;
        if n.norm() <= 1e-12 {
            return Err(Error::DegenerateGradient(arr(x)));
        }
        Ok(n)
    }

    pub fn residual(&self, x: &Vec3) -> f64 {
        self.f.eval(x) - self.c
    }

    /// Newton iteration along the gradient onto f = c.
    pub fn project(&self, x: &Vec3) -> Result<Vec3> {
        let mut y = *x;
        for _ in 0..100 {
            let r = self.f.try_eval(&y)? - self.c;
            if r.abs() <= 1e-14 * (1.0 + self.c.abs()) {
                return Ok(y);
            }
            let n = self.normal(&y)?;
            y -= r / n.norm_squared() * n;
        }
        Err(Error::Domain(format!("projection onto the level set did not converge from {:?}", arr(x))))
    }
}

/// How the scaling ν is chosen.
#[derive(Debug, Clone)]
pub enum Scaling {
    /// An explicit ν(x).
    Field(ScalarField),
    /// ν² = 2h(f) / (g ‖f_x × Φ_x‖²), so that ‖v‖² = 2h(f).
    EnergyNormalized,
}

/// Generator v = ν (‖f_x‖² Φ_x − (f_x, Φ_x) f_x) on a level surface.
#[derive(Clone)]
pub struct GeodesicSystem {
    pub surface: LevelSurface,
    pub phi: ScalarField,
    pub nu: Scaling,
    pub h: Profile,
}

impl std::fmt::Debug for GeodesicSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeodesicSystem").field("surface", &self.surface).field("nu", &self.nu).finish()
    }
}

impl GeodesicSystem {
    pub fn new(surface: LevelSurface, phi: ScalarField, nu: Scaling, h: Profile) -> Self {
        Self { surface, phi, nu, h }
    }

    pub fn field(&self, x: &Vec3) -> Result<Vec3> {
        surface_cartesian_field(self, x)
    }

    pub fn vector_field(&self) -> VectorField {
        let s = self.clone();
        VectorField::new(move |x| s.field(x).unwrap_or_else(|_| Vec3::repeat(f64::NAN)))
    }

    /// Component of the flow acceleration along n̂ × v̂ (zero for geodesics).
    pub fn side_force(&self, x: &Vec3) -> Result<f64> {
        let v = self.field(x)?;
        let acc = jacobian(&self.vector_field(), x)? * v;
        let n = self.surface.normal(x)?.normalize();
        let speed = v.norm();
        if speed == 0.0 {
            return Ok(0.0);
        }
        Ok(acc.dot(&n.cross(&(v / speed))))
    }
}

pub fn surface_cartesian_field(sys: &GeodesicSystem, x: &Vec3) -> Result<Vec3> {
    let fx = sys.surface.normal(x)?;
    let px = grad(&sys.phi, x)?;
    let g = fx.norm_squared();
    let dir = g * px - fx.dot(&px) * fx;
    let nu = match &sys.nu {
        Scaling::Field(nu) => nu.try_eval(x)?,
        Scaling::EnergyNormalized => {
            let s = g * fx.cross(&px).norm_squared();
            let h = (sys.h)(sys.surface.f.eval(x));
            if !(s > 0.0) {
                return Err(Error::DegenerateField(format!("f_x and Phi_x are parallel at {:?}", arr(x))));
            }
            if !(h >= 0.0) {
                return Err(Error::Domain(format!("energy profile h(f) = {h} is negative")));
            }
            (2.0 * h / s).sqrt()
        }
    };
    Ok(nu * dir)
}

/// Acceleration of a free particle on the level set: μ ∇f with
/// μ = −(Hess f · ẋ, ẋ) / ‖∇f‖².
pub fn geodesic_acceleration(surface: &LevelSurface, x: &Vec3, xdot: &Vec3) -> Result<Vec3> {
    let fx = surface.normal(x)?;
    let tang = fx.dot(xdot);
    if tang.abs() > 1e-6 * (1.0 + fx.norm() * xdot.norm()) {
        return Err(Error::NonTangent(tang));
    }
    let a = hessian(&surface.f, x)?;
    let mu = -(a * xdot).dot(xdot) / fx.norm_squared();
    Ok(mu * fx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceIntegrals {
    pub f1: f64,
    pub f2: Option<f64>,
    pub f3: Option<f64>,
}

/// F1 = ‖ẋ‖²; F2 when (f_x, Φ_x) ≠ 0; F3 when (f_x, Φ_x) = 0 and Φ_x is not radial.
pub fn first_integrals(sys: &GeodesicSystem, x: &Vec3, xdot: &Vec3) -> Result<SurfaceIntegrals> {
    let fx = grad(&sys.surface.f, x)?;
    let px = grad(&sys.phi, x)?;
    let dot = fx.dot(&px);
    let scale = fx.norm() * px.norm();
    let f1 = xdot.norm_squared();
    let (mut f2, mut f3) = (None, None);
    if dot.abs() > 1e-9 * scale.max(1e-300) {
        f2 = Some((fx.norm() * px.cross(xdot).norm() / dot).powi(2));
    } else {
        let xp = x.cross(&px).norm();
        if xp > 1e-9 * x.norm() * px.norm() {
            f3 = Some((px.norm() * x.cross(xdot).norm() / xp).powi(2));
        }
    }
    Ok(SurfaceIntegrals { f1, f2, f3 })
}

/// Level set of a homogeneous function of degree m.
#[derive(Debug, Clone)]
pub struct HomogeneousSurface {
    pub surface: LevelSurface,
    pub m: f64,
}

impl HomogeneousSurface {
    pub fn new(surface: LevelSurface, m: f64) -> Self {
        Self { surface, m }
    }
}

/// ((x, f_x) − m f, ‖A x − (m−1) f_x‖, (x, g_x) − 2(m−1) g) with A = Hess f, g = ‖f_x‖².
pub fn homogeneity_residuals(hs: &HomogeneousSurface, x: &Vec3) -> Result<(f64, f64, f64)> {
    let f = hs.surface.f.try_eval(x)?;
    let fx = grad(&hs.surface.f, x)?;
    let a = hessian(&hs.surface.f, x)?;
    let g = fx.norm_squared();
    let gx = 2.0 * a * fx;
    Ok((
        x.dot(&fx) - hs.m * f,
        (a * x - (hs.m - 1.0) * fx).norm(),
        x.dot(&gx) - 2.0 * (hs.m - 1.0) * g,
    ))
}

/// v = ν (g x − m f f_x) with ν² g (g r² − m² f²) = 2h(f).
pub fn homogeneous_cartesian_field(hs: &HomogeneousSurface, h: &Profile, x: &Vec3) -> Result<Vec3> {
    let f = hs.surface.f.try_eval(x)?;
    let fx = hs.surface.normal(x)?;
    let g = fx.norm_squared();
    let disc = g * x.norm_squared() - hs.m * hs.m * f * f;
    let dir = g * x - hs.m * f * fx;
    if dir.norm() <= 1e-10 * g * x.norm().max(1e-300) {
        return Err(Error::DegenerateField(format!("g x - m f f_x vanishes at {:?}", arr(x))));
    }
    if !(disc > 0.0) {
        return Err(Error::Domain(format!("g r^2 - m^2 f^2 = {disc} is not positive")));
    }
    let hv = h(f);
    if !(hv >= 0.0) {
        return Err(Error::Domain(format!("energy profile h(f) = {hv} is negative")));
    }
    Ok((2.0 * hv / (g * disc)).sqrt() * dir)
}

/// g ‖x × ẋ‖² − 2 m² f² h(f); constant (zero) along the homogeneous flow.
pub fn homogeneous_integral(hs: &HomogeneousSurface, h: &Profile, x: &Vec3, xdot: &Vec3) -> Result<f64> {
    let f = hs.surface.f.try_eval(x)?;
    let g = grad(&hs.surface.f, x)?.norm_squared();
    Ok(g * x.cross(xdot).norm_squared() - 2.0 * hs.m * hs.m * f * f * h(f))
}

/// Conic section of the cone r + (b, x) = ‖č‖² by the plane (x, č) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeplerSurface {
    pub b: Vec3,
    pub c: Vec3,
}

impl KeplerSurface {
    pub fn new(b: Vec3, c: Vec3) -> Result<Self> {
        if b.norm() >= 1.0 {
            return Err(Error::InvalidInput("Kepler surface needs |b| < 1".into()));
        }
        if c.norm() == 0.0 {
            return Err(Error::InvalidInput("Kepler surface needs a non-zero c".into()));
        }
        if b.dot(&c).abs() > 1e-12 * (1.0 + b.norm() * c.norm()) {
            return Err(Error::InvalidInput("Kepler surface needs (b, c) = 0".into()));
        }
        Ok(Self { b, c })
    }

    pub fn level(&self) -> f64 {
        self.c.norm_squared()
    }

    pub fn f(&self, x: &Vec3) -> f64 {
        x.norm() + self.b.dot(x)
    }

    pub fn surface(&self) -> LevelSurface {
        let b = self.b;
        let f = ScalarField::new(move |x| x.norm() + b.dot(x)).with_gradient(move |x| x / x.norm() + b);
        LevelSurface { f, c: self.level() }
    }

    /// The point of the orbit in direction u (projected into the plane).
    pub fn point_towards(&self, u: &Vec3) -> Result<Vec3> {
        let n = self.c.normalize();
        let d = u - u.dot(&n) * n;
        if d.norm() == 0.0 {
            return Err(Error::InvalidInput("direction is normal to the orbit plane".into()));
        }
        let d = d.normalize();
        Ok(self.level() / (1.0 + self.b.dot(&d)) * d)
    }

    /// Orbit period in σ: semi-major axis ‖č‖²/(1 − ‖b‖²).
    pub fn period(&self) -> f64 {
        let a = self.level() / (1.0 - self.b.norm_squared());
        2.0 * std::f64::consts::PI * a.powf(1.5)
    }

    /// ((x'‖² − 2/r) − (‖b‖² − 1)/‖č‖², ‖[x' × č] − (x/r + b)‖, ‖[x × x'] − č‖).
    pub fn invariants(&self, x: &Vec3, xp: &Vec3) -> [f64; 3] {
        let r = x.norm();
        [
            xp.norm_squared() - 2.0 / r - (self.b.norm_squared() - 1.0) / self.c.norm_squared(),
            (xp.cross(&self.c) - (x / r + self.b)).norm(),
            (x.cross(xp) - self.c).norm(),
        ]
    }
}

/// x' = [č × f_x] / ‖č‖², oriented so that x × x' = č on the orbit.
pub fn kepler_surface_flow(ks: &KeplerSurface, x: &Vec3) -> Result<Vec3> {
    let off = x.dot(&ks.c);
    if off.abs() > 1e-9 * (1.0 + x.norm() * ks.c.norm()) {
        return Err(Error::Domain(format!("point is off the orbit plane by {off:e}")));
    }
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::DegenerateGradient(arr(x)));
    }
    let fx = x / r + ks.b;
    Ok(ks.c.cross(&fx) / ks.c.norm_squared())
}

/// Geodesic generator as a first-order formulation, monitoring the level
/// value, ‖v‖² − 2h(f) and the side force.
pub fn geodesic_cartesian(sys: &GeodesicSystem) -> FieldFormulation {
    let (s1, s2, s3, s4) = (sys.clone(), sys.clone(), sys.clone(), sys.clone());
    FieldFormulation::new(move |x| s1.field(x))
        .with_invariant(Monitor::new("f", move |y| s2.surface.f.eval(&pt(y))))
        .with_invariant(Monitor::new("speed2-2h", move |y| {
            let x = pt(y);
            s3.field(&x).map(|v| v.norm_squared() - 2.0 * (s3.h)(s3.surface.f.eval(&x))).unwrap_or(f64::NAN)
        }))
        .with_constraint(Monitor::new("side_force", move |y| s4.side_force(&pt(y)).unwrap_or(f64::NAN)))
}

/// Free particle held on the level set by a normal reaction, started with
/// the velocity of the generator.
pub fn geodesic_classical(sys: &GeodesicSystem) -> Result<ConstrainedFormulation> {
    let surf = sys.surface.clone();
    let cs = ConstrainedSystem::new(Mat3::identity(), |_, _| Ok(Vec3::zeros()), surf.f.as_gradient_field())?;
    let s = sys.clone();
    Ok(ConstrainedFormulation::new(cs, move |x| s.field(x))
        .with_invariant(Monitor::new("f", move |y| surf.f.eval(&pt(y))))
        .with_invariant(Monitor::new("speed2", |y| y[3] * y[3] + y[4] * y[4] + y[5] * y[5])))
}

/// Homogeneous-surface flow with the level value, the integral and ‖v‖² − 2h(f).
pub fn homogeneous_cartesian(hs: &HomogeneousSurface, h: &Profile) -> FieldFormulation {
    let (a, b, c) = ((hs.clone(), h.clone()), (hs.clone(), h.clone()), hs.clone());
    let d = (hs.clone(), h.clone());
    FieldFormulation::new(move |x| homogeneous_cartesian_field(&a.0, &a.1, x))
        .with_invariant(Monitor::new("f", move |y| c.surface.f.eval(&pt(y))))
        .with_invariant(Monitor::new("integral", move |y| {
            let x = pt(y);
            homogeneous_cartesian_field(&b.0, &b.1, &x)
                .and_then(|v| homogeneous_integral(&b.0, &b.1, &x, &v))
                .unwrap_or(f64::NAN)
        }))
        .with_invariant(Monitor::new("speed2-2h", move |y| {
            let x = pt(y);
            homogeneous_cartesian_field(&d.0, &d.1, &x)
                .map(|v| v.norm_squared() - 2.0 * (d.1)(d.0.surface.f.eval(&x)))
                .unwrap_or(f64::NAN)
        }))
}

/// The σ-flow on a Kepler orbit with its three invariants.
pub fn kepler_cartesian(ks: &KeplerSurface) -> FieldFormulation {
    let k = *ks;
    let mut out = FieldFormulation::new(move |x| kepler_surface_flow(&k, x));
    for (i, name) in ["energy", "laplace", "momentum"].into_iter().enumerate() {
        out = out.with_invariant(Monitor::new(name, move |y| {
            let x = pt(y);
            kepler_surface_flow(&k, &x).map(|v| k.invariants(&x, &v)[i]).unwrap_or(f64::NAN)
        }));
    }
    out
}

/// x'' = −x/r³ started with the σ-flow velocity; state (x, x').
#[derive(Debug, Clone, Copy)]
pub struct KeplerClassical {
    pub ks: KeplerSurface,
}

impl OdeSystem for KeplerClassical {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let x = pt(y);
        let r3 = x.norm().powi(3);
        if r3 == 0.0 {
            return Err(Error::DegenerateGradient(arr(&x)));
        }
        dy[..3].copy_from_slice(&y[3..6]);
        dy[3..].copy_from_slice((-x / r3).as_slice());
        Ok(())
    }
}

impl Formulation for KeplerClassical {
    fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>> {
        if x0.len() != 3 {
            return Err(Error::InvalidInput(format!("expected 3 coordinates, got {}", x0.len())));
        }
        let x = pt(x0);
        let v = kepler_surface_flow(&self.ks, &x)?;
        Ok(vec![x[0], x[1], x[2], v[0], v[1], v[2]])
    }

    fn position(&self, y: &[f64]) -> Vec<f64> {
        y[..3].to_vec()
    }

    fn invariants(&self) -> Vec<Monitor> {
        let k = self.ks;
        ["energy", "laplace", "momentum"]
            .into_iter()
            .enumerate()
            .map(|(i, name)| Monitor::new(name, move |y| k.invariants(&pt(y), &pt(&y[3..]))[i]))
            .collect()
    }
}

fn pt(y: &[f64]) -> Vec3 {
    Vec3::new(y[0], y[1], y[2])
}

/// Gaussian curvature two ways: the closed expression for homogeneous
/// surfaces (`k_closed_form`) and the standard implicit-surface formula.
pub fn gaussian_curvature(hs: &HomogeneousSurface, x: &Vec3) -> Result<(f64, f64)> {
    let f = hs.surface.f.try_eval(x)?;
    let fx = hs.surface.normal(x)?;
    let a = hessian(&hs.surface.f, x)?;
    let g = fx.norm_squared();
    let k_oracle = (adjugate(&a) * fx).dot(&fx) / (g * g);
    let k_closed_form = if (hs.m - 1.0).abs() > 1e-12 {
        -f * a.determinant() / ((hs.m - 1.0) * g * g)
    } else {
        if x[0].abs() <= 1e-12 {
            return Err(Error::Domain("degree-one branch needs x1 != 0".into()));
        }
        let m = Mat3::from_rows(&[fx.transpose(), a.row(1).into_owned(), a.row(2).into_owned()]);
        -f * m.determinant() / (x[0] * g * g)
    };
    Ok((k_closed_form, k_oracle))
}

/// adj(A + zI) f_x and its decomposition z² X1 + z X2 + X3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VzFamily {
    pub v: Vec3,
    pub x1: Vec3,
    pub x2: Vec3,
    pub x3: Vec3,
    /// max over z ∈ {−1, 0, 1} of ‖adj(A+zI) f_x − (z² X1 + z X2 + X3)‖
    pub identity_residual: f64,
}

pub fn vz_family(surface: &LevelSurface, x: &Vec3, z: f64) -> Result<VzFamily> {
    let fx = grad(&surface.f, x)?;
    let a = hessian(&surface.f, x)?;
    let x1 = fx;
    let x2 = a.trace() * fx - a * fx;
    let x3 = adjugate(&a) * fx;
    let at = |z: f64| adjugate(&(a + z * Mat3::identity())) * fx;
    let identity_residual = [-1.0, 0.0, 1.0]
        .iter()
        .map(|&z| (at(z) - (z * z * x1 + z * x2 + x3)).norm())
        .fold(0.0, f64::max);
    Ok(VzFamily { v: at(z), x1, x2, x3, identity_residual })
}

/// Bordered matrix R_z = [[A + zI, f_x], [f_xᵀ, 0]].
pub fn bordered_det(surface: &LevelSurface, x: &Vec3, z: f64) -> Result<f64> {
    let fx = grad(&surface.f, x)?;
    let a = hessian(&surface.f, x)? + z * Mat3::identity();
    let mut r = Matrix4::zeros();
    r.fixed_view_mut::<3, 3>(0, 0).copy_from(&a);
    r.fixed_view_mut::<3, 1>(0, 3).copy_from(&fx);
    r.fixed_view_mut::<1, 3>(3, 0).copy_from(&fx.transpose());
    Ok(r.determinant())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VzRoute {
    /// The normalized v_{z_j} agree with the eigen-directions.
    Agrees,
    /// v_{z_j} vanishes (f_x is a Hessian eigenvector, or umbilic point).
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureReport {
    /// Roots of det R_z = 0 (the negated extrema).
    pub z1: f64,
    pub z2: f64,
    /// Extrema of (A τ, τ) over unit tangent τ, k1 ≥ k2.
    pub extrema: (f64, f64),
    pub tau1: Vec3,
    pub tau2: Vec3,
    /// Gaussian curvature by the implicit-surface formula.
    pub k_oracle: f64,
    pub umbilic: bool,
    pub vz_route: VzRoute,
    /// Largest |det R_z| at the two roots.
    pub det_at_roots: f64,
}

/// Orthonormal basis of the plane orthogonal to n.
pub fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let n = n.normalize();
    let pick = if n[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (pick - pick.dot(&n) * n).normalize();
    (e1, n.cross(&e1))
}

/// Principal directions: eigenproblem of the Hessian projected on the
/// tangent plane, cross-checked against the bordered-determinant roots.
pub fn principal_directions(surface: &LevelSurface, x: &Vec3) -> Result<CurvatureReport> {
    let fx = surface.normal(x)?;
    let a = hessian(&surface.f, x)?;
    let (e1, e2) = tangent_basis(&fx);
    let b = Matrix2::new(e1.dot(&(a * e1)), e1.dot(&(a * e2)), e2.dot(&(a * e1)), e2.dot(&(a * e2)));
    let eig = SymmetricEigen::new(b);
    let (i1, i2) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let (k1, k2) = (eig.eigenvalues[i1], eig.eigenvalues[i2]);
    let dir = |i: usize| (eig.eigenvectors[(0, i)] * e1 + eig.eigenvectors[(1, i)] * e2).normalize();
    let (tau1, tau2) = (dir(i1), dir(i2));
    let g = fx.norm_squared();
    let k_oracle = (adjugate(&a) * fx).dot(&fx) / (g * g);
    let scale = 1.0 + k1.abs().max(k2.abs());
    let umbilic = (k1 - k2).abs() <= 1e-9 * scale;
    let (z1, z2) = (-k1, -k2);

    let mut vz_route = VzRoute::Degenerate;
    if !umbilic {
        let v1 = adjugate(&(a + z1 * Mat3::identity())) * fx;
        let v2 = adjugate(&(a + z2 * Mat3::identity())) * fx;
        let tiny = 1e-8 * scale * scale * fx.norm();
        if v1.norm() > tiny && v2.norm() > tiny {
            let ok1 = v1.normalize().dot(&tau1).abs() > 1.0 - 1e-8;
            let ok2 = v2.normalize().dot(&tau2).abs() > 1.0 - 1e-8;
            if ok1 && ok2 {
                vz_route = VzRoute::Agrees;
            }
        }
    }
    let det_at_roots = bordered_det(surface, x, z1)?.abs().max(bordered_det(surface, x, z2)?.abs());
    Ok(CurvatureReport { z1, z2, extrema: (k1, k2), tau1, tau2, k_oracle, umbilic, vz_route, det_at_roots })
}

/// Independent check of the principal curvatures: scan (A τ, τ) over
/// `samples` unit tangents on a half circle, then refine the best sample of
/// each extremum by a parabola through its neighbours.
pub fn brute_force_extrema(surface: &LevelSurface, x: &Vec3, samples: usize) -> Result<(f64, f64)> {
    if samples < 3 {
        return Err(Error::InvalidInput("need at least three samples".into()));
    }
    let fx = surface.normal(x)?;
    let a = hessian(&surface.f, x)?;
    let (e1, e2) = tangent_basis(&fx);
    let step = std::f64::consts::PI / samples as f64;
    let q = |k: isize| {
        let th = step * k as f64;
        let t = th.cos() * e1 + th.sin() * e2;
        t.dot(&(a * t))
    };
    let vals: Vec<f64> = (0..samples as isize).map(q).collect();
    let refine = |k: usize| {
        let (l, c, r) = (q(k as isize - 1), vals[k], q(k as isize + 1));
        let den = l - 2.0 * c + r;
        if den == 0.0 {
            c
        } else {
            c - (r - l) * (r - l) / (8.0 * den)
        }
    };
    let imax = (0..samples).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    let imin = (0..samples).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    Ok((refine(imax), refine(imin)))
}

/// μ given either as a function of (f, g, r) or as a plain field in x.
#[derive(Clone)]
pub enum DevelopmentCoefficient {
    Fgr(Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>),
    Field(ScalarField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DevelopmentBranch {
    /// {f, g, r} ≠ 0: the field reduces to κ(f, Φ)[f_x × [f_x × Φ_x]] with Φ_x = Φ_x(f, g, r).
    Generic,
    /// {f, g, r} = 0: κ = μ1 g_r / r + μ2 with Φ_x = x.
    Dependent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Development {
    pub v: Vec3,
    /// {f,g,r}(∂_r μ1 − r ∂_g μ2 − r μ2/g) when the coefficients are given in
    /// (f,g,r) form; otherwise (f_x, curl v)/g.
    pub residual: f64,
    /// (f_x, curl v)/g computed from the field by finite differences.
    pub curl_test: f64,
    pub triple: f64,
    pub branch: DevelopmentBranch,
}

fn fgr_of(f: &ScalarField, x: &Vec3) -> Result<(f64, f64, f64)> {
    Ok((f.try_eval(x)?, grad(f, x)?.norm_squared(), x.norm()))
}

/// v = [f_x × [f_x × (μ1 g_x + μ2 x)]] and its Cartesian-condition residual.
pub fn tangent_development_field(
    hs: &HomogeneousSurface,
    mu1: &DevelopmentCoefficient,
    mu2: &DevelopmentCoefficient,
    x: &Vec3,
) -> Result<Development> {
    let f = hs.surface.f.clone();
    let fx = hs.surface.normal(x)?;
    let a = hessian(&f, x)?;
    let g = fx.norm_squared();
    let x2 = a.trace() * fx - a * fx;
    let x3 = adjugate(&a) * fx;
    let disc = fx.dot(&x2).powi(2) - 4.0 * fx.dot(&x3) * g;
    if !(disc > 0.0) {
        return Err(Error::Domain(format!("discriminant {disc:e} is not positive")));
    }
    let eval_mu = |m: &DevelopmentCoefficient, y: &Vec3, f: &ScalarField| -> f64 {
        match m {
            DevelopmentCoefficient::Fgr(h) => match fgr_of(f, y) {
                Ok((a, b, c)) => h(a, b, c),
                Err(_) => f64::NAN,
            },
            DevelopmentCoefficient::Field(s) => s.eval(y),
        }
    };
    let (m1, m2, fc) = (mu1.clone(), mu2.clone(), f.clone());
    let field = VectorField::new(move |y| {
        let fy = grad(&fc, y).unwrap_or_else(|_| Vec3::repeat(f64::NAN));
        let gy = 2.0 * hessian(&fc, y).unwrap_or_else(|_| Mat3::repeat(f64::NAN)) * fy;
        let w = eval_mu(&m1, y, &fc) * gy + eval_mu(&m2, y, &fc) * y;
        fy.cross(&fy.cross(&w))
    });
    let v = field.try_eval(x)?;
    let curl_test = fx.dot(&curl(&field, x)?) / g;

    let gfield = {
        let fc = f.clone();
        ScalarField::new(move |y| grad(&fc, y).map(|v| v.norm_squared()).unwrap_or(f64::NAN))
    };
    let rfield = ScalarField::new(|y| y.norm()).with_gradient(|y| y / y.norm());
    let gx = 2.0 * a * fx;
    let triple = Mat3::from_rows(&[fx.transpose(), gx.transpose(), grad(&rfield, x)?.transpose()]).determinant();
    let _ = &gfield;
    let branch = if triple.abs() <= 1e-9 * fx.norm() * gx.norm().max(1e-300) {
        DevelopmentBranch::Dependent
    } else {
        DevelopmentBranch::Generic
    };
    let residual = match (mu1, mu2) {
        (DevelopmentCoefficient::Fgr(p1), DevelopmentCoefficient::Fgr(p2)) => {
            let (fv, gv, rv) = fgr_of(&f, x)?;
            let h = 1e-6;
            let d_r_mu1 = (p1(fv, gv, rv * (1.0 + h)) - p1(fv, gv, rv * (1.0 - h))) / (2.0 * h * rv);
            let d_g_mu2 = (p2(fv, gv * (1.0 + h), rv) - p2(fv, gv * (1.0 - h), rv)) / (2.0 * h * gv);
            triple * (d_r_mu1 - rv * d_g_mu2 - rv * p2(fv, gv, rv) / gv)
        }
        _ => curl_test,
    };
    Ok(Development { v, residual, curl_test, triple, branch })
}

/// Confocal elliptic coordinates with parameters a_i = 1/b_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticCoords {
    /// λ1 ≤ λ2 ≤ λ3
    pub lambda: [f64; 3],
    /// Some x_i = 0: the point lies on a coordinate plane where the chart folds.
    pub boundary: bool,
    /// g_ii of ‖ẋ‖² = Σ g_ii λ̇_i².
    pub metric: [f64; 3],
}

fn distinct(a: &[f64; 3]) -> Result<()> {
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (a[i] - a[j]).abs() <= 1e-12 * (1.0 + a[i].abs()) {
                return Err(Error::InvalidInput("elliptic coordinates need pairwise distinct parameters".into()));
            }
        }
    }
    Ok(())
}

/// x_i² from the coordinates: Π_k(λ_k + a_i) / Π_{j≠i}(a_i − a_j).
pub fn elliptic_inverse(a: &[f64; 3], lambda: &[f64; 3]) -> Result<[f64; 3]> {
    distinct(a)?;
    let mut out = [0.0; 3];
    for i in 0..3 {
        let num: f64 = lambda.iter().map(|l| l + a[i]).product();
        let den: f64 = (0..3).filter(|&j| j != i).map(|j| a[i] - a[j]).product();
        out[i] = num / den;
    }
    Ok(out)
}

/// λ's are the roots in w of Σ x_i²/(w + a_i) = 1, i.e. the eigenvalues of diag(−a) + x xᵀ.
pub fn elliptic_coordinates(a: [f64; 3], x: &Vec3) -> Result<EllipticCoords> {
    distinct(&a)?;
    let m = Mat3::from_diagonal(&Vec3::new(-a[0], -a[1], -a[2])) + x * x.transpose();
    let mut l: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("elliptic coordinates are not finite".into()));
    }
    l.sort_by(f64::total_cmp);
    let lambda = [l[0], l[1], l[2]];
    let boundary = (0..3).any(|i| x[i].abs() <= 1e-12 * (1.0 + x.norm()));
    let mut metric = [0.0; 3];
    for i in 0..3 {
        let num: f64 = (0..3).filter(|&j| j != i).map(|j| lambda[i] - lambda[j]).product();
        let den: f64 = 4.0 * a.iter().map(|am| lambda[i] + am).product::<f64>();
        metric[i] = num / den;
    }
    Ok(EllipticCoords { lambda, boundary, metric })
}

/// Field ν ∇_x Φ(ξ, η, ζ) with ξ = ½(x₁²−x₂²), η = ½(x₃²−x₁²), ζ = ½(x₂²−x₃²);
/// `phi` is a field on (ξ, η, ζ) space. Tangent to every level of x₁x₂x₃.
pub fn cubic_surface_field(phi: &ScalarField, nu: &ScalarField, x: &Vec3) -> Result<Vec3> {
    if x.iter().any(|c| c.abs() <= 1e-12) {
        return Err(Error::Domain(format!("{:?} lies on a coordinate plane", arr(x))));
    }
    let s = cubic_invariants(x);
    let p = grad(phi, &s)?;
    let v = Vec3::new(x[0] * (p[0] - p[1]), x[1] * (p[2] - p[0]), x[2] * (p[1] - p[2]));
    Ok(nu.try_eval(x)? * v)
}

pub fn cubic_invariants(x: &Vec3) -> Vec3 {
    let q = x.component_mul(x);
    0.5 * Vec3::new(q[0] - q[1], q[2] - q[0], q[1] - q[2])
}

/// Quadratic generators of three-dimensional Lie algebras of the fields
/// X = a × e1, Y = a × e2, Z = a × e3 with a = ∇f.
pub fn lie_family(id: u8, params: &[f64]) -> Result<Poly3> {
    let need = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("family {id} takes {n} parameters, got {}", params.len())))
        }
    };
    let p = params;
    Ok(match id {
        1 => {
            need(3)?;
            Poly3::new(vec![(p[0], [2, 0, 0]), (p[1], [0, 2, 0]), (p[2], [0, 0, 2])])
        }
        2 => {
            need(3)?;
            // b1 x² + a (y² − z²) + 2 b y z with params (b1, a, b)
            Poly3::new(vec![(p[0], [2, 0, 0]), (p[1], [0, 2, 0]), (-p[1], [0, 0, 2]), (2.0 * p[2], [0, 1, 1])])
        }
        3 => {
            need(2)?;
            // 2 b y x + b3 z² with params (b, b3)
            Poly3::new(vec![(2.0 * p[0], [1, 1, 0]), (p[1], [0, 0, 2])])
        }
        4 => {
            need(2)?;
            // b y² + 2 b1 z x with params (b, b1)
            Poly3::new(vec![(p[0], [0, 2, 0]), (2.0 * p[1], [1, 0, 1])])
        }
        _ => return Err(Error::InvalidInput(format!("unknown family {id}; expected 1..4"))),
    })
}

fn lie_fields(f: &ScalarField) -> [VectorField; 3] {
    let e = [Vec3::x(), Vec3::y(), Vec3::z()];
    e.map(|ei| {
        let (fa, fh) = (f.clone(), f.clone());
        let v = VectorField::new(move |x| grad(&fa, x).unwrap_or_else(|_| Vec3::repeat(f64::NAN)).cross(&ei));
        if f.has_hessian() {
            // column k of D(a × e) is (∂_k a) × e
            v.with_jacobian(move |x| {
                let h = hessian(&fh, x).unwrap_or_else(|_| Mat3::repeat(f64::NAN));
                Mat3::from_columns(&[h.column(0).cross(&ei), h.column(1).cross(&ei), h.column(2).cross(&ei)])
            })
        } else {
            v
        }
    })
}

fn lie_mismatch(f: &ScalarField, frozen: &Mat3, y: &Vec3) -> Result<f64> {
    use crate::veccalc::lie_bracket;
    let [x, yv, z] = lie_fields(f);
    let u1 = [lie_bracket(&yv, &z, y)?, lie_bracket(&z, &x, y)?, lie_bracket(&x, &yv, y)?];
    let u2 = [x.try_eval(y)?, yv.try_eval(y)?, z.try_eval(y)?];
    let mut worst = 0.0f64;
    for i in 0..3 {
        let comb = frozen[(i, 0)] * u2[0] + frozen[(i, 1)] * u2[1] + frozen[(i, 2)] * u2[2];
        worst = worst.max((u1[i] - comb).amax());
    }
    Ok(worst)
}

/// ([Y,Z], [Z,X], [X,Y]) − A(x)(X, Y, Z) at x itself. This vanishes for
/// every f, so it checks the bracket machinery rather than closure.
pub fn lie_identity_residual(f: &ScalarField, x: &Vec3) -> Result<f64> {
    lie_mismatch(f, &hessian(f, x)?, x)
}

/// Closure test: with A frozen at x, the bracket relation must keep holding
/// on a stencil around x, i.e. the structure functions must be constants.
pub fn lie_closure_residual(f: &ScalarField, x: &Vec3) -> Result<f64> {
    let frozen = hessian(f, x)?;
    let mut worst = lie_mismatch(f, &frozen, x)?;
    for k in 0..3 {
        for s in [-0.1, 0.1] {
            let mut y = *x;
            y[k] += s;
            worst = worst.max(lie_mismatch(f, &frozen, &y)?);
        }
    }
    Ok(worst)
}

/// x_i² of the quadric f = ½ Σ b_i x_i² from (f, g, r²), g = Σ b_i² x_i².
pub fn quadric_inverse(b: [f64; 3], f: f64, g: f64, r2: f64) -> Result<[f64; 3]> {
    distinct(&b)?;
    let mut out = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        out[i] = (b[j] * b[k] * r2 - 2.0 * (b[j] + b[k]) * f + g) / ((b[i] - b[j]) * (b[i] - b[k]));
        if out[i] < -1e-12 * (1.0 + r2.abs()) {
            return Err(Error::Domain(format!("x{}^2 = {} is negative: data not on a real quadric", i + 1, out[i])));
        }
        out[i] = out[i].max(0.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::veccalc::vec3;
    use approx::assert_relative_eq;

    fn sphere() -> LevelSurface {
        LevelSurface::new(
            ScalarField::new(|x| 0.5 * x.norm_squared()).with_gradient(|x| *x).with_hessian(|_| Mat3::identity()),
            0.5,
        )
        .unwrap()
    }

    fn spheroid() -> LevelSurface {
        let f = Poly3::new(vec![(0.5, [2, 0, 0]), (0.5, [0, 2, 0]), (2.0, [0, 0, 2])]);
        LevelSurface::new(f.to_field(), 0.5).unwrap()
    }

    fn coord(i: usize) -> ScalarField {
        ScalarField::new(move |x| x[i]).with_gradient(move |_| {
            let mut e = Vec3::zeros();
            e[i] = 1.0;
            e
        })
    }

    #[test]
    fn cartesian_field_examples() {
        let sys = GeodesicSystem::new(sphere(), coord(2), Scaling::Field(ScalarField::constant(1.0)), constant_profile(0.5));
        assert_relative_eq!(sys.field(&vec3(1., 0., 0.)).unwrap(), vec3(0., 0., 1.), epsilon = 1e-12);
        let same = GeodesicSystem::new(sphere(), sphere().f, Scaling::Field(ScalarField::constant(1.0)), constant_profile(0.5));
        assert!(same.field(&vec3(0.3, 0.4, 0.5)).unwrap().norm() < 1e-12);
        let r2 = ScalarField::new(|x| x.norm_squared()).with_gradient(|x| 2.0 * x);
        let sp = GeodesicSystem::new(spheroid(), r2, Scaling::Field(ScalarField::constant(1.0)), constant_profile(0.5));
        let p = vec3(1., 1., 1.);
        let v = sp.field(&p).unwrap();
        assert!(v.norm() > 0.1);
        assert!(grad(&spheroid().f, &p).unwrap().dot(&v).abs() < 1e-12);
    }

    #[test]
    fn geodesic_acceleration_examples() {
        let a = geodesic_acceleration(&sphere(), &vec3(1., 0., 0.), &vec3(0., 0., 1.)).unwrap();
        assert_relative_eq!(a, vec3(-1., 0., 0.), epsilon = 1e-9);
        let plane = LevelSurface::new(coord(2), 1.0).unwrap();
        let a = geodesic_acceleration(&plane, &vec3(1., 2., 1.), &vec3(3., -1., 0.)).unwrap();
        assert!(a.norm() < 1e-6);
        let cyl = LevelSurface::new(ScalarField::new(|x| 0.5 * (x[0] * x[0] + x[1] * x[1])), 0.5).unwrap();
        let a = geodesic_acceleration(&cyl, &vec3(1., 0., 0.), &vec3(0., 1., 1.)).unwrap();
        assert_relative_eq!(a, vec3(-1., 0., 0.), epsilon = 1e-6);
        assert!(matches!(geodesic_acceleration(&sphere(), &vec3(1., 0., 0.), &vec3(1., 0., 0.)), Err(Error::NonTangent(_))));
    }

    #[test]
    fn first_integrals_branches() {
        let sys = GeodesicSystem::new(sphere(), coord(2), Scaling::EnergyNormalized, constant_profile(0.5));
        let p = vec3(0.6, 0.0, 0.8);
        let v = sys.field(&p).unwrap();
        let fi = first_integrals(&sys, &p, &v).unwrap();
        assert_relative_eq!(fi.f1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fi.f2.unwrap(), 1.0, epsilon = 1e-12);
        assert!(fi.f3.is_none());
        let still = first_integrals(&sys, &p, &Vec3::zeros()).unwrap();
        assert_eq!(still.f1, 0.0);
        let lat = ScalarField::new(|x| x[2] / x.norm());
        let sys3 = GeodesicSystem::new(sphere(), lat, Scaling::EnergyNormalized, constant_profile(0.5));
        let v = sys3.field(&p).unwrap();
        let fi = first_integrals(&sys3, &p, &v).unwrap();
        assert!(fi.f2.is_none());
        assert_relative_eq!(fi.f3.unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn homogeneity_examples() {
        let hs = HomogeneousSurface::new(sphere(), 2.0);
        let (a, b, c) = homogeneity_residuals(&hs, &vec3(1., 2., 3.)).unwrap();
        assert!(a.abs() < 1e-12 && b < 1e-9 && c.abs() < 1e-9);
        let cubic = Poly3::new(vec![(1.0, [1, 1, 1])]).to_field();
        let hs = HomogeneousSurface::new(LevelSurface::new(cubic, 6.0).unwrap(), 3.0);
        let (a, b, c) = homogeneity_residuals(&hs, &vec3(1., 2., 3.)).unwrap();
        assert!(a.abs() < 1e-12 && b < 1e-12 && c.abs() < 1e-12);
        let ks = KeplerSurface::new(vec3(0.3, 0., 0.), vec3(0., 0., 1.)).unwrap();
        let hs = HomogeneousSurface::new(ks.surface(), 1.0);
        let (a, b, c) = homogeneity_residuals(&hs, &vec3(1., 1., 1.)).unwrap();
        assert!(a.abs() < 1e-9 && b < 1e-9 && c.abs() < 1e-9);
    }

    #[test]
    fn homogeneous_field_examples() {
        let hs = HomogeneousSurface::new(spheroid(), 2.0);
        let h: Profile = Arc::new(|f| f);
        let p = vec3(1., 1., 1.);
        let v = homogeneous_cartesian_field(&hs, &h, &p).unwrap();
        let dir = vec3(12., 12., -6.).normalize();
        assert_relative_eq!(v.normalize(), dir, epsilon = 1e-12);
        assert!(vec3(1., 1., 4.).dot(&v).abs() < 1e-12);
        assert_relative_eq!(v.norm_squared(), 2.0 * 3.0, epsilon = 1e-12);
        assert!(homogeneous_integral(&hs, &h, &p, &v).unwrap().abs() < 1e-9);
        let hs = HomogeneousSurface::new(sphere(), 2.0);
        assert!(matches!(homogeneous_cartesian_field(&hs, &h, &vec3(0.6, 0., 0.8)), Err(Error::DegenerateField(_))));
    }

    #[test]
    fn kepler_circle() {
        let ks = KeplerSurface::new(Vec3::zeros(), vec3(0., 0., 1.)).unwrap();
        for s in [0.0, 0.7, 2.0] {
            let x = vec3(f64::cos(s), f64::sin(s), 0.0);
            let xp = kepler_surface_flow(&ks, &x).unwrap();
            assert_relative_eq!(xp, vec3(-s.sin(), s.cos(), 0.0), epsilon = 1e-12);
            for r in ks.invariants(&x, &xp) {
                assert!(r.abs() < 1e-9);
            }
        }
        assert!(kepler_surface_flow(&ks, &vec3(1., 0., 0.5)).is_err());
        assert!(KeplerSurface::new(vec3(0.1, 0., 0.1), vec3(0., 0., 1.)).is_err());
    }

    #[test]
    fn curvature_examples() {
        let hs = HomogeneousSurface::new(sphere(), 2.0);
        let (kp, ko) = gaussian_curvature(&hs, &vec3(0., 0.6, 0.8)).unwrap();
        assert_relative_eq!(ko, 1.0, epsilon = 1e-12);
        assert_relative_eq!(kp, -0.5, epsilon = 1e-12);
        let flat = HomogeneousSurface::new(LevelSurface::new(ScalarField::new(|x| 0.5 * x[0] * x[0]), 0.5).unwrap(), 2.0);
        assert!(gaussian_curvature(&flat, &vec3(1., 0.3, 0.2)).unwrap().1.abs() < 1e-6);
        let ell = Poly3::new(vec![(0.5, [2, 0, 0]), (1.0, [0, 2, 0]), (1.5, [0, 0, 2])]).to_field();
        let hs = HomogeneousSurface::new(LevelSurface::new(ell, 0.5).unwrap(), 2.0);
        assert_relative_eq!(gaussian_curvature(&hs, &vec3(1., 0., 0.)).unwrap().1, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn vz_examples() {
        let fam = vz_family(&sphere(), &vec3(0.6, 0., 0.8), 0.5).unwrap();
        assert_relative_eq!(fam.v, 2.25 * vec3(0.6, 0., 0.8), epsilon = 1e-12);
        assert_relative_eq!(fam.x2, 2.0 * vec3(0.6, 0., 0.8), epsilon = 1e-12);
        assert!(fam.identity_residual < 1e-12);
        let far = vz_family(&sphere(), &vec3(0.6, 0., 0.8), 1e6).unwrap();
        assert!(far.v.normalize().dot(&vec3(0.6, 0., 0.8)) > 1.0 - 1e-9);
        let ell = Poly3::new(vec![(0.5, [2, 0, 0]), (1.0, [0, 2, 0]), (1.5, [0, 0, 2])]).to_field();
        let s = LevelSurface::new(ell, 3.0).unwrap();
        assert_relative_eq!(vz_family(&s, &vec3(1., 1., 1.), 0.0).unwrap().v, vec3(6., 6., 6.), epsilon = 1e-12);
    }

    #[test]
    fn principal_direction_examples() {
        let rep = principal_directions(&sphere(), &vec3(0., 0.6, 0.8)).unwrap();
        assert!(rep.umbilic);
        assert_relative_eq!(rep.extrema.0, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.extrema.1, 1.0, epsilon = 1e-12);

        let cyl = Poly3::new(vec![(0.5, [2, 0, 0]), (0.5, [0, 2, 0])]).to_field();
        let rep = principal_directions(&LevelSurface::new(cyl, 0.5).unwrap(), &vec3(1., 0., 0.)).unwrap();
        assert!(!rep.umbilic);
        assert_relative_eq!(rep.extrema.0, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.extrema.1, 0.0, epsilon = 1e-12);
        assert!(rep.tau1.dot(&Vec3::y()).abs() > 1.0 - 1e-12);
        assert!(rep.tau2.dot(&Vec3::z()).abs() > 1.0 - 1e-12);
        assert_eq!(rep.vz_route, VzRoute::Degenerate);
    }

    #[test]
    fn development_examples() {
        let hs = HomogeneousSurface::new(spheroid(), 2.0);
        let zero: DevelopmentCoefficient = DevelopmentCoefficient::Fgr(Arc::new(|_, _, _| 0.0));
        let one: DevelopmentCoefficient = DevelopmentCoefficient::Fgr(Arc::new(|_, _, _| 1.0));
        let p = vec3(0.7, 0.2, 0.3);
        let d = tangent_development_field(&hs, &zero, &one, &p).unwrap();
        assert_eq!(d.branch, DevelopmentBranch::Dependent);
        assert!(d.residual.abs() < 1e-9);
        assert!(grad(&hs.surface.f, &p).unwrap().dot(&d.v).abs() < 1e-12);
    }

    #[test]
    fn elliptic_examples() {
        let a = [1.0, 2.0, 3.0];
        let x = vec3(1., 1., 1.);
        let ec = elliptic_coordinates(a, &x).unwrap();
        let back = elliptic_inverse(&a, &ec.lambda).unwrap();
        for i in 0..3 {
            assert!((back[i] - 1.0).abs() < 1e-9);
        }
        // λ1 ∈ [−3, −2], λ2 ∈ [−2, −1], λ3 ≥ −1
        assert!(ec.lambda[0] >= -3.0 && ec.lambda[0] <= -2.0);
        assert!(ec.lambda[1] >= -2.0 && ec.lambda[1] <= -1.0);
        assert!(ec.lambda[2] >= -1.0);
        assert!(!ec.boundary);
        assert!(ec.metric.iter().all(|g| *g > 0.0));
        assert!(elliptic_coordinates(a, &vec3(0., 0., 2.)).unwrap().boundary);
        assert!(elliptic_coordinates([1.0, 1.0, 3.0], &x).is_err());
    }

    #[test]
    fn cubic_examples() {
        let one = ScalarField::constant(1.0);
        let xi = coord(0);
        let p = vec3(1., 2., 3.);
        assert_relative_eq!(cubic_surface_field(&xi, &one, &p).unwrap(), vec3(1., -2., 0.), epsilon = 1e-12);
        let sum = ScalarField::new(|s| s[0] + s[1] + s[2]).with_gradient(|_| Vec3::repeat(1.0));
        assert!(cubic_surface_field(&sum, &one, &p).unwrap().norm() < 1e-12);
        let xi2 = ScalarField::new(|s| s[0] * s[0]);
        let v = cubic_surface_field(&xi2, &one, &p).unwrap();
        assert!(vec3(6., 3., 2.).dot(&v).abs() <= 1e-10 * (1.0 + v.norm()));
        assert!(cubic_surface_field(&xi, &one, &vec3(0., 1., 1.)).is_err());
    }

    #[test]
    fn lie_examples() {
        let p = vec3(1., 2., 3.);
        let f1 = lie_family(1, &[1., 1., 1.]).unwrap().to_field();
        assert!(lie_closure_residual(&f1, &p).unwrap() <= 1e-8);
        let f3 = lie_family(3, &[1., 1.]).unwrap().to_field();
        assert!(lie_closure_residual(&f3, &p).unwrap() <= 1e-8);
        let quartic = Poly3::new(vec![(1.0, [4, 0, 0])]).to_field();
        assert!(lie_identity_residual(&quartic, &p).unwrap() <= 1e-8);
        // X vanishes and Y, Z commute, so x1^4 closes trivially
        assert!(lie_closure_residual(&quartic, &p).unwrap() <= 1e-8);
        let mixed = Poly3::new(vec![(1.0, [4, 0, 0]), (1.0, [0, 4, 0]), (1.0, [0, 0, 4])]).to_field();
        assert!(lie_identity_residual(&mixed, &p).unwrap() <= 1e-6);
        assert!(lie_closure_residual(&mixed, &p).unwrap() > 1e-3);
        assert!(lie_family(5, &[]).is_err());
    }

    #[test]
    fn quadric_inverse_examples() {
        let q = quadric_inverse([1., 2., 3.], 3.0, 14.0, 3.0).unwrap();
        for v in q {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let (b1, x1) = (2.0, 1.5);
        let f = 0.5 * b1 * x1 * x1;
        let q = quadric_inverse([b1, 3., 5.], f, b1 * b1 * x1 * x1, x1 * x1).unwrap();
        assert_relative_eq!(q[0], 2.0 * f / b1, epsilon = 1e-12);
        assert!(q[1].abs() < 1e-12 && q[2].abs() < 1e-12);
        assert!(quadric_inverse([1., 2., 3.], 3.0, 0.0, 3.0).is_err());
    }
}
