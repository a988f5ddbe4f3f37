//! Flat nonholonomic systems: a particle with the constraint
//! ẋ₁ + â(x₃) ẋ₂ = 0, and the Chaplygin sleigh / skate with
//! ε ẋ + sin x ẏ − cos x ż = 0.

use std::sync::Arc;

use crate::cartesian::{Constraint, MetricFn};
use crate::engine::quad::{find_root, integrate as quad, integrate_default, QuadTol};
use crate::engine::{
    ConstrainedFormulation, ConstrainedSystem, FieldFormulation, Monitor, Termination, Trajectory,
};
use crate::error::{Error, Result};
use crate::veccalc::{grad, Mat3, ScalarField, Vec3, VectorField};

pub use crate::veccalc::{Fn1, Fn2};

fn d1(f: &Fn1, x: f64) -> f64 {
    let h = 1e-5 * (1.0 + x.abs());
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Particle of unit mass with force function U(x₃) and the constraint
/// ẋ₁ + â(x₃) ẋ₂ = 0.
#[derive(Clone)]
pub struct ParticleSystem {
    pub ahat: Fn1,
    pub u: Fn1,
    pub a: f64,
    /// ẋ₃ = −b(x₃)
    pub b: Fn1,
}

impl std::fmt::Debug for ParticleSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParticleSystem").field("a", &self.a).finish_non_exhaustive()
    }
}

impl ParticleSystem {
    pub fn new(ahat: Fn1, u: Fn1, a: f64, b: Fn1) -> Self {
        Self { ahat, u, a, b }
    }

    /// b = sign·√(2(U + h)), consistent with energy ½‖ẋ‖² − U.
    pub fn energy_consistent(ahat: Fn1, u: Fn1, a: f64, h: f64, sign: f64) -> Self {
        let uu = u.clone();
        let b: Fn1 = Arc::new(move |x3| sign * (2.0 * (uu(x3) + h)).max(0.0).sqrt());
        Self { ahat, u, a, b }
    }

    pub fn constraint(&self) -> Constraint {
        let ah = self.ahat.clone();
        Constraint::new(VectorField::new(move |x| Vec3::new(1.0, ah(x[2]), 0.0)))
    }

    /// ẋ₂ √(1 + â²); equals −A along the first-order flow.
    pub fn momentum(&self, x: &Vec3, xd: &Vec3) -> f64 {
        xd[1] * (1.0 + (self.ahat)(x[2]).powi(2)).sqrt()
    }

    pub fn energy(&self, x: &Vec3, xd: &Vec3) -> f64 {
        0.5 * xd.norm_squared() - (self.u)(x[2])
    }
}

pub fn rosenberg_field(ps: &ParticleSystem, x: &Vec3) -> Vec3 {
    let ah = (ps.ahat)(x[2]);
    let s = (1.0 + ah * ah).sqrt();
    Vec3::new(ah * ps.a / s, -ps.a / s, -(ps.b)(x[2]))
}

/// ẍ = (μ, â μ, U'(x₃)) with μ = −â' ẋ₂ ẋ₃ / (1 + â²).
pub fn rosenberg_classical_rhs(ps: &ParticleSystem, x: &Vec3, xd: &Vec3) -> Result<(Vec3, f64)> {
    let ah = (ps.ahat)(x[2]);
    let r = xd[0] + ah * xd[1];
    if r.abs() > 1e-9 * (1.0 + xd.norm() * (1.0 + ah.abs())) {
        return Err(Error::ConstraintViolated(r));
    }
    let mu = -d1(&ps.ahat, x[2]) * xd[1] * xd[2] / (1.0 + ah * ah);
    Ok((Vec3::new(mu, ah * mu, d1(&ps.u, x[2])), mu))
}

pub fn rosenberg_cartesian(ps: &ParticleSystem) -> FieldFormulation {
    let (p1, p2, p3) = (ps.clone(), ps.clone(), ps.clone());
    FieldFormulation::new(move |x| Ok(rosenberg_field(&p1, x)))
        .with_invariant(Monitor::new("momentum", move |y| {
            let x = Vec3::new(y[0], y[1], y[2]);
            p2.momentum(&x, &rosenberg_field(&p2, &x))
        }))
        .with_invariant(Monitor::new("energy", move |y| {
            let x = Vec3::new(y[0], y[1], y[2]);
            p3.energy(&x, &rosenberg_field(&p3, &x))
        }))
}

pub fn rosenberg_classical(ps: &ParticleSystem) -> Result<ConstrainedFormulation> {
    let u = ps.u.clone();
    let sys = ConstrainedSystem::new(
        Mat3::identity(),
        move |x, _| Ok(Vec3::new(0.0, 0.0, d1(&u, x[2]))),
        ps.constraint().a,
    )?;
    let (pv, p2, p3) = (ps.clone(), ps.clone(), ps.clone());
    Ok(ConstrainedFormulation::new(sys, move |x| Ok(rosenberg_field(&pv, x)))
        .with_invariant(Monitor::new("momentum", move |y| {
            p2.momentum(&Vec3::new(y[0], y[1], y[2]), &Vec3::new(y[3], y[4], y[5]))
        }))
        .with_invariant(Monitor::new("energy", move |y| {
            p3.energy(&Vec3::new(y[0], y[1], y[2]), &Vec3::new(y[3], y[4], y[5]))
        })))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SleighParams {
    pub m: f64,
    pub j_c: f64,
    pub eps: f64,
}

impl SleighParams {
    pub fn new(m: f64, j_c: f64, eps: f64) -> Result<Self> {
        if !(m > 0.0 && j_c > 0.0 && eps >= 0.0) || !(m.is_finite() && j_c.is_finite() && eps.is_finite()) {
            return Err(Error::InvalidInput("sleigh needs m > 0, J_C > 0, eps >= 0".into()));
        }
        Ok(Self { m, j_c, eps })
    }

    /// J = J_C + ε² m
    pub fn j(&self) -> f64 {
        self.j_c + self.eps * self.eps * self.m
    }

    /// q² = m / J
    pub fn q(&self) -> f64 {
        (self.m / self.j()).sqrt()
    }

    pub fn mass_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(self.j_c, self.m, self.m))
    }

    pub fn metric(&self) -> MetricFn {
        let m = self.mass_matrix();
        Arc::new(move |_| m)
    }

    pub fn constraint(&self) -> Constraint {
        let e = self.eps;
        Constraint::new(
            VectorField::new(move |s| Vec3::new(e, s[0].sin(), -s[0].cos()))
                .with_jacobian(|s| Mat3::new(0.0, 0.0, 0.0, s[0].cos(), 0.0, 0.0, s[0].sin(), 0.0, 0.0)),
        )
    }

    /// ½ (J_C ẋ² + m (ẏ² + ż²))
    pub fn kinetic(&self, v: &Vec3) -> f64 {
        0.5 * (self.j_c * v[0] * v[0] + self.m * (v[1] * v[1] + v[2] * v[2]))
    }
}

/// λ₂, λ₃ as functions of the sleigh state (x, y, z).
#[derive(Debug, Clone)]
pub struct LambdaPair {
    pub l2: ScalarField,
    pub l3: ScalarField,
}

impl LambdaPair {
    pub fn new(l2: ScalarField, l3: ScalarField) -> Self {
        Self { l2, l3 }
    }

    /// Pair depending on the heading only.
    pub fn of_heading(l2: Fn1, l3: Fn1) -> Self {
        let (a, b) = (l2, l3);
        Self { l2: ScalarField::new(move |s| a(s[0])), l3: ScalarField::new(move |s| b(s[0])) }
    }

    /// λ₂ = C₀ sin(qεx + C), λ₃ = C₀ q cos(qεx + C).
    pub fn inertial(params: &SleighParams, c0: f64, c: f64) -> Self {
        let (q, e) = (params.q(), params.eps);
        let l2 = ScalarField::new(move |s| c0 * (q * e * s[0] + c).sin())
            .with_gradient(move |s| Vec3::new(c0 * q * e * (q * e * s[0] + c).cos(), 0.0, 0.0));
        let l3 = ScalarField::new(move |s| c0 * q * (q * e * s[0] + c).cos())
            .with_gradient(move |s| Vec3::new(-c0 * q * q * e * (q * e * s[0] + c).sin(), 0.0, 0.0));
        Self { l2, l3 }
    }
}

/// (λ₃, λ₂ cos x − ε λ₃ sin x, λ₂ sin x + ε λ₃ cos x)
pub fn sleigh_field(lp: &LambdaPair, params: &SleighParams, s: &Vec3) -> Result<Vec3> {
    let (l2, l3) = (lp.l2.try_eval(s)?, lp.l3.try_eval(s)?);
    let (sx, cx) = s[0].sin_cos();
    let e = params.eps;
    Ok(Vec3::new(l3, l2 * cx - e * l3 * sx, l2 * sx + e * l3 * cx))
}

pub fn sleigh_constraint_residual(params: &SleighParams, s: &Vec3, v: &Vec3) -> f64 {
    params.eps * v[0] + s[0].sin() * v[1] - s[0].cos() * v[2]
}

/// sin x (J ∂_zλ₃ + εm ∂_yλ₂) + cos x (J ∂_yλ₃ − εm ∂_zλ₂) − m (∂_xλ₂ − ελ₃)
pub fn sleigh_pde_residual(lp: &LambdaPair, params: &SleighParams, s: &Vec3) -> Result<f64> {
    let g2 = grad(&lp.l2, s)?;
    let g3 = grad(&lp.l3, s)?;
    let l3 = lp.l3.try_eval(s)?;
    let (j, em, m) = (params.j(), params.eps * params.m, params.m);
    let (sx, cx) = s[0].sin_cos();
    Ok(sx * (j * g3[2] + em * g2[1]) + cx * (j * g3[1] - em * g2[2]) - m * (g2[0] - params.eps * l3))
}

/// Cauchy–Riemann check ∂_yV₁ = ∂_zV₂, ∂_zV₁ = −∂_yV₂ on a fixed grid.
fn cr_violation(v1: &Fn2, v2: &Fn2) -> f64 {
    let h = 1e-4;
    let mut worst = 0.0f64;
    for &y in &[-1.3, -0.4, 0.2, 0.9, 1.7] {
        for &z in &[-1.1, -0.3, 0.5, 1.2] {
            let dy = |f: &Fn2| (f(y + h, z) - f(y - h, z)) / (2.0 * h);
            let dz = |f: &Fn2| (f(y, z + h) - f(y, z - h)) / (2.0 * h);
            let scale = 1.0 + dy(v1).abs() + dz(v1).abs();
            worst = worst.max((dy(v1) - dz(v2)).abs() / scale).max((dz(v1) + dy(v2)).abs() / scale);
        }
    }
    worst
}

/// λ₂ = cos α V₁ − sin α V₂ + ε ∫₀ˣ K,  λ₃ = K − k (sin α V₁ + cos α V₂),
/// with α = ε² m x / J, k = ε m / J and (V₁, V₂) a Cauchy–Riemann pair in (y, z).
pub fn sleigh_closed_form(v1: Fn2, v2: Fn2, k: Fn1, params: &SleighParams) -> Result<LambdaPair> {
    let bad = cr_violation(&v1, &v2);
    if bad > 1e-6 {
        return Err(Error::InvalidInput(format!("V1, V2 violate the Cauchy-Riemann conditions by {bad:e}")));
    }
    let j = params.j();
    let (e, m) = (params.eps, params.m);
    let alpha = move |x: f64| e * e * m * x / j;
    let kk = e * m / j;
    let (a1, a2, ka) = (v1.clone(), v2.clone(), k.clone());
    let l2 = ScalarField::new(move |s| {
        let (sa, ca) = alpha(s[0]).sin_cos();
        let ik = if e == 0.0 { 0.0 } else { integrate_default(|u| ka(u), 0.0, s[0]).unwrap_or(f64::NAN) };
        ca * a1(s[1], s[2]) - sa * a2(s[1], s[2]) + e * ik
    });
    let l3 = ScalarField::new(move |s| {
        let (sa, ca) = alpha(s[0]).sin_cos();
        k(s[0]) - kk * (sa * v1(s[1], s[2]) + ca * v2(s[1], s[2]))
    });
    Ok(LambdaPair { l2, l3 })
}

/// ε = 0 skate in a gravity field along y: ẋ = C₀, λ₂ = g sin x / C₀ + C₁.
/// For C₀ = 0 the heading is frozen and λ₂ = g t cos x + C₁ is time-dependent,
/// so that branch is only available through the classical equations.
pub fn skate_gravity_flow(c0: f64, c1: f64, g: f64, s: &Vec3) -> Result<Vec3> {
    if c0 == 0.0 {
        return Err(Error::InvalidInput("C0 = 0 is the frozen-heading branch; use the classical system".into()));
    }
    let l2 = g * s[0].sin() / c0 + c1;
    Ok(Vec3::new(c0, l2 * s[0].cos(), l2 * s[0].sin()))
}

/// E = ½ (J_C ẋ² + m (ẏ² + ż²)) − m g y
pub fn skate_energy(params: &SleighParams, g: f64, s: &Vec3, v: &Vec3) -> f64 {
    params.kinetic(v) - params.m * g * s[1]
}

fn constraint_monitor(params: SleighParams, v: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Monitor {
    Monitor::new("constraint", move |y| {
        let s = Vec3::new(y[0], y[1], y[2]);
        sleigh_constraint_residual(&params, &s, &v(&s))
    })
}

pub fn skate_cartesian(params: &SleighParams, c0: f64, c1: f64, g: f64) -> FieldFormulation {
    let p = *params;
    FieldFormulation::new(move |s| skate_gravity_flow(c0, c1, g, s))
        .with_invariant(Monitor::new("energy", move |y| {
            let s = Vec3::new(y[0], y[1], y[2]);
            skate_energy(&p, g, &s, &skate_gravity_flow(c0, c1, g, &s).unwrap_or_default())
        }))
        .with_constraint(constraint_monitor(*params, move |s| skate_gravity_flow(c0, c1, g, s).unwrap_or_default()))
}

pub fn skate_classical(params: &SleighParams, c0: f64, c1: f64, g: f64) -> Result<ConstrainedFormulation> {
    if params.eps != 0.0 {
        return Err(Error::InvalidInput("the skate has eps = 0".into()));
    }
    let m = params.m;
    let sys = ConstrainedSystem::new(params.mass_matrix(), move |_, _| Ok(Vec3::new(0.0, m * g, 0.0)), params.constraint().a)?;
    let p = *params;
    Ok(ConstrainedFormulation::new(sys, move |s| skate_gravity_flow(c0, c1, g, s)).with_invariant(Monitor::new(
        "energy",
        move |y| skate_energy(&p, g, &Vec3::new(y[0], y[1], y[2]), &Vec3::new(y[3], y[4], y[5])),
    )))
}

/// Sleigh moving by inertia along a λ field, with kinetic energy monitored.
pub fn sleigh_cartesian(lp: &LambdaPair, params: &SleighParams) -> FieldFormulation {
    let (l1, p) = (lp.clone(), *params);
    let (l2, l3) = (lp.clone(), lp.clone());
    FieldFormulation::new(move |s| sleigh_field(&l1, &p, s))
        .with_invariant(Monitor::new("energy", move |y| {
            let s = Vec3::new(y[0], y[1], y[2]);
            sleigh_field(&l2, &p, &s).map(|v| p.kinetic(&v)).unwrap_or(f64::NAN)
        }))
        .with_constraint(constraint_monitor(*params, move |s| sleigh_field(&l3, &p, s).unwrap_or_default()))
}

pub fn sleigh_classical(lp: &LambdaPair, params: &SleighParams) -> Result<ConstrainedFormulation> {
    let sys = ConstrainedSystem::new(params.mass_matrix(), |_, _| Ok(Vec3::zeros()), params.constraint().a)?;
    let (l, p) = (lp.clone(), *params);
    Ok(ConstrainedFormulation::new(sys, move |s| sleigh_field(&l, &p, s))
        .with_invariant(Monitor::new("energy", move |y| p.kinetic(&Vec3::new(y[3], y[4], y[5])))))
}

/// Sleigh path by quadrature in the heading for λ's depending on x only:
/// dt/dx = 1/λ₃, dy/dx = λ₂ cos x/λ₃ − ε sin x, dz/dx = λ₂ sin x/λ₃ + ε cos x.
/// Samples are returned in increasing time; `samples` ≥ 2 grid points in x.
pub fn sleigh_quadrature(
    l2: &Fn1,
    l3: &Fn1,
    params: &SleighParams,
    start: &Vec3,
    x_end: f64,
    samples: usize,
) -> Result<Trajectory> {
    if samples < 2 || !x_end.is_finite() {
        return Err(Error::InvalidInput("quadrature needs a finite range and at least two samples".into()));
    }
    let x0 = start[0];
    let e = params.eps;
    // λ₃ must keep one sign on the range
    let probe = 64 * samples;
    let sign = l3(x0).signum();
    for i in 0..=probe {
        let x = x0 + (x_end - x0) * i as f64 / probe as f64;
        let v = l3(x);
        if v == 0.0 || v.signum() != sign || !v.is_finite() {
            let lo = x0 + (x_end - x0) * (i.max(1) - 1) as f64 / probe as f64;
            let turn = if v.is_finite() && l3(lo).signum() == sign {
                find_root(|u| Ok(l3(u)), lo, x, 1e-12).unwrap_or(x)
            } else {
                x
            };
            return Err(Error::TurningPoint(turn));
        }
    }
    let tol = QuadTol { rel: 1e-13, abs: 1e-15, max_depth: 48 };
    let a3 = l3.clone();
    let dt = move |x: f64| 1.0 / a3(x);
    let (b2, b3) = (l2.clone(), l3.clone());
    let dy = move |x: f64| b2(x) * x.cos() / b3(x) - e * x.sin();
    let (c2, c3) = (l2.clone(), l3.clone());
    let dz = move |x: f64| c2(x) * x.sin() / c3(x) + e * x.cos();

    let mut tr = Trajectory {
        times: Vec::with_capacity(samples),
        states: Vec::with_capacity(samples),
        derivatives: Vec::with_capacity(samples),
        diagnostics: Vec::new(),
        termination: Termination::Completed,
        steps: samples - 1,
    };
    let (mut t, mut s) = (0.0, *start);
    let lam = LambdaPair::of_heading(l2.clone(), l3.clone());
    for i in 0..samples {
        if i > 0 {
            let (xa, xb) = (s[0], x0 + (x_end - x0) * i as f64 / (samples - 1) as f64);
            t += quad(&dt, xa, xb, tol)?;
            s = Vec3::new(xb, s[1] + quad(&dy, xa, xb, tol)?, s[2] + quad(&dz, xa, xb, tol)?);
        }
        tr.times.push(t);
        tr.states.push(s.as_slice().to_vec());
        tr.derivatives.push(sleigh_field(&lam, params, &s)?.as_slice().to_vec());
    }
    if sign < 0.0 {
        tr.times.reverse();
        tr.states.reverse();
        tr.derivatives.reverse();
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::veccalc::vec3;
    use approx::assert_relative_eq;

    fn fn1(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Fn1 {
        Arc::new(f)
    }

    fn unit() -> SleighParams {
        SleighParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rosenberg_examples() {
        let ps = ParticleSystem::new(Arc::new(|x| x), Arc::new(|_| 0.0), 1.0, Arc::new(|_| 0.0));
        assert_relative_eq!(rosenberg_field(&ps, &vec3(0.3, 0.1, 0.0)), vec3(0., -1., 0.), epsilon = 1e-15);
        let drift = ParticleSystem::new(Arc::new(|x| x), Arc::new(|_| 0.0), 0.0, Arc::new(|x| 2.0 + x));
        assert_eq!(rosenberg_field(&drift, &vec3(0., 0., 1.)), vec3(0., 0., -3.));
        let v = rosenberg_field(&ps, &vec3(0., 0., 0.7));
        assert!((v[0] + 0.7 * v[1]).abs() < 1e-15);
    }

    #[test]
    fn rosenberg_classical_checks() {
        let ps = ParticleSystem::new(Arc::new(|x| x), Arc::new(|x: f64| -(x - 1.0).powi(2)), 1.0, Arc::new(|_| 0.0));
        let x = vec3(0., 0., 1.);
        let (acc, _) = rosenberg_classical_rhs(&ps, &x, &rosenberg_field(&ps, &x)).unwrap();
        assert!(acc[2].abs() < 1e-9);
        assert!(matches!(rosenberg_classical_rhs(&ps, &x, &vec3(1., 0., 0.)), Err(Error::ConstraintViolated(_))));
    }

    #[test]
    fn sleigh_field_examples() {
        let p = unit();
        let glide = LambdaPair::of_heading(Arc::new(|_| 2.0), Arc::new(|_| 0.0));
        let s = vec3(0.4, 1.0, -1.0);
        let v = sleigh_field(&glide, &p, &s).unwrap();
        assert_relative_eq!(v, vec3(0., 2.0 * 0.4f64.cos(), 2.0 * 0.4f64.sin()), epsilon = 1e-15);
        assert!(sleigh_constraint_residual(&p, &s, &v).abs() < 1e-15);
        let inert = LambdaPair::inertial(&p, 1.0, 0.0);
        let v = sleigh_field(&inert, &p, &Vec3::zeros()).unwrap();
        let q = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(v, vec3(q, 0., q), epsilon = 1e-15);
    }

    #[test]
    fn pde_residual_examples() {
        let p = unit();
        let glide = LambdaPair::of_heading(Arc::new(|_| 2.0), Arc::new(|_| 0.0));
        assert!(sleigh_pde_residual(&glide, &p, &vec3(0.3, 0.2, 0.1)).unwrap().abs() < 1e-9);
        let inert = LambdaPair::inertial(&SleighParams::new(2.0, 0.5, 0.3).unwrap(), 1.3, 0.4);
        let r = sleigh_pde_residual(&inert, &SleighParams::new(2.0, 0.5, 0.3).unwrap(), &vec3(0.7, 0.0, 0.0)).unwrap();
        assert!(r.abs() < 1e-10);
        let cr = sleigh_closed_form(Arc::new(|y, _| y), Arc::new(|_, z| z), Arc::new(|_| 0.0), &p).unwrap();
        assert!(sleigh_pde_residual(&cr, &p, &vec3(0.3, 0.5, -0.2)).unwrap().abs() < 1e-8);
    }

    #[test]
    fn closed_form_examples() {
        let p = SleighParams::new(1.5, 0.7, 0.4).unwrap();
        let k: Fn1 = Arc::new(|x: f64| 1.0 + 0.3 * x.cos());
        let lp = sleigh_closed_form(Arc::new(|_, _| 0.0), Arc::new(|_, _| 0.0), k, &p).unwrap();
        for s in [vec3(0.2, 0.1, 0.3), vec3(-1.0, 2.0, 0.0)] {
            assert!(sleigh_pde_residual(&lp, &p, &s).unwrap().abs() < 1e-8);
        }
        // (y² − z², 2yz) is a Cauchy–Riemann pair
        let lp = sleigh_closed_form(Arc::new(|y, z| y * y - z * z), Arc::new(|y, z| 2.0 * y * z), Arc::new(|x: f64| x.sin()), &p).unwrap();
        assert!(sleigh_pde_residual(&lp, &p, &vec3(0.5, 0.3, -0.4)).unwrap().abs() < 1e-7);
        assert!(sleigh_closed_form(Arc::new(|y, _| y), Arc::new(|y, _| y), Arc::new(|_| 0.0), &p).is_err());
        let arrow = SleighParams::new(1.0, 1.0, 0.0).unwrap();
        let lp = sleigh_closed_form(Arc::new(|y, _| y), Arc::new(|_, z| z), Arc::new(|_| 0.5), &arrow).unwrap();
        assert_eq!(lp.l2.eval(&vec3(3.0, 2.0, 1.0)), 2.0);
    }

    #[test]
    fn skate_examples() {
        let v = skate_gravity_flow(1.0, 2.0, 0.0, &vec3(0.8, 0., 0.)).unwrap();
        assert_relative_eq!(v[1] * v[1] + v[2] * v[2], 4.0, epsilon = 1e-12);
        assert!(skate_gravity_flow(0.0, 1.0, 9.8, &Vec3::zeros()).is_err());
    }

    #[test]
    fn quadrature_turning_point() {
        let p = unit();
        let r = sleigh_quadrature(&fn1(|_| 1.0), &fn1(|x| x.cos()), &p, &Vec3::zeros(), 3.0, 10);
        match r {
            Err(Error::TurningPoint(x)) => assert!((x - std::f64::consts::FRAC_PI_2).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spin_in_place() {
        let p = SleighParams::new(1.0, 1.0, 0.0).unwrap();
        let tr = sleigh_quadrature(&fn1(|_| 0.0), &fn1(|_| 2.0), &p, &vec3(0., 1., 2.), 4.0, 5).unwrap();
        let last = tr.last();
        assert_relative_eq!(tr.t_final(), 2.0, epsilon = 1e-12);
        assert!((last[1] - 1.0).abs() < 1e-14 && (last[2] - 2.0).abs() < 1e-14);
    }
}
