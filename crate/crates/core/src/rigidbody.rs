//! Rigid body about a fixed point with a nonholonomic constraint on the
//! angular velocity: the Suslov problem (ω₃ = 0) and the Veselov problem
//! ((γ, ω) = const), in body variables (ω, γ) and on the Euler-angle chart.
//!
//! Euler chart: γ = (sin z sin x, sin z cos x, cos z) and
//! ω = (ẏ sin z sin x + ż cos x, ẏ sin z cos x − ż sin x, ẏ cos z + ẋ).

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::engine::quad::{find_root, integrate as quad, integrate_default, QuadTol};
use crate::engine::{Formulation, Monitor, OdeSystem, Termination, Trajectory};
use crate::error::{arr, Error, Result};
use crate::veccalc::{covector_curl, grad, Fn1, Fn2, Mat3, ScalarField, Vec3, VectorField};

/// Trajectories stop when |sin z| falls below this.
pub const POLE_MARGIN: f64 = 1e-3;

const QTOL: QuadTol = QuadTol { rel: 1e-13, abs: 1e-15, max_depth: 48 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl Inertia {
    pub fn new(i1: f64, i2: f64, i3: f64) -> Result<Self> {
        if !(i1 > 0.0 && i2 > 0.0 && i3 > 0.0) || !(i1.is_finite() && i2.is_finite() && i3.is_finite()) {
            return Err(Error::InvalidInput("principal moments must be positive and finite".into()));
        }
        Ok(Self { i1, i2, i3 })
    }

    pub fn diag(&self) -> Vec3 {
        Vec3::new(self.i1, self.i2, self.i3)
    }

    /// Triangle inequalities of a physical body (advisory only).
    pub fn is_physical(&self) -> bool {
        let (a, b, c) = (self.i1, self.i2, self.i3);
        a + b >= c && b + c >= a && a + c >= b
    }

    pub fn symmetric(&self) -> bool {
        (self.i1 - self.i2).abs() <= 1e-14 * self.i1.max(self.i2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EulerState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_vec(v: &Vec3) -> Self {
        Self { x: v[0], y: v[1], z: v[2] }
    }

    pub fn to_vec(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    fn check(&self) -> Result<()> {
        if self.z.sin().abs() <= 1e-12 {
            return Err(Error::ChartDegeneracy(format!("sin z = 0 at z = {}", self.z)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub omega: Vec3,
    pub gamma: Vec3,
}

impl BodyState {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.omega[0], self.omega[1], self.omega[2], self.gamma[0], self.gamma[1], self.gamma[2]]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self { omega: Vec3::new(y[0], y[1], y[2]), gamma: Vec3::new(y[3], y[4], y[5]) }
    }
}

/// Kinetic metric ½ (I ω, ω) in the Euler chart.
pub fn so3_metric(inertia: &Inertia, e: &EulerState) -> Result<Mat3> {
    e.check()?;
    Ok(so3_metric_unchecked(inertia, e))
}

fn so3_metric_unchecked(i: &Inertia, e: &EulerState) -> Mat3 {
    let (sx, cx) = e.x.sin_cos();
    let (sz, cz) = e.z.sin_cos();
    let g12 = i.i3 * cz;
    let g22 = (i.i1 * sx * sx + i.i2 * cx * cx) * sz * sz + i.i3 * cz * cz;
    let g23 = (i.i1 - i.i2) * sx * cx * sz;
    let g33 = i.i1 * cx * cx + i.i2 * sx * sx;
    Mat3::new(i.i3, g12, 0.0, g12, g22, g23, 0.0, g23, g33)
}

pub fn gamma_of_angles(e: &EulerState) -> Vec3 {
    let (sx, cx) = e.x.sin_cos();
    let (sz, cz) = e.z.sin_cos();
    Vec3::new(sz * sx, sz * cx, cz)
}

/// Inverse of [`gamma_of_angles`] with y = 0; γ is normalized first.
pub fn angles_of_gamma(g: &Vec3) -> EulerState {
    let n = g.norm();
    EulerState::new(g[0].atan2(g[1]), 0.0, (g[2] / n).clamp(-1.0, 1.0).acos())
}

/// Body angular velocity from Euler-angle rates.
pub fn omega_of_rates(e: &EulerState, rates: &Vec3) -> Vec3 {
    let (sx, cx) = e.x.sin_cos();
    let (sz, cz) = e.z.sin_cos();
    let (xd, yd, zd) = (rates[0], rates[1], rates[2]);
    Vec3::new(yd * sz * sx + zd * cx, yd * sz * cx - zd * sx, yd * cz + xd)
}

/// Equations of motion with ω₃ = 0 and force function U(γ):
/// I₁ω̇₁ = γ₃U₂ − γ₂U₃, I₂ω̇₂ = γ₁U₃ − γ₃U₁, γ̇ = γ × ω.
/// Returns the derivative with ω̇₃ = 0.
pub fn suslov_classical_rhs(inertia: &Inertia, u: &ScalarField, s: &BodyState) -> Result<BodyState> {
    if s.omega[2].abs() > 1e-12 * (1.0 + s.omega.norm()) {
        return Err(Error::ConstraintViolated(s.omega[2]));
    }
    let g = s.gamma;
    let du = grad(u, &g)?;
    let w = Vec3::new(s.omega[0], s.omega[1], 0.0);
    Ok(BodyState {
        omega: Vec3::new((g[2] * du[1] - g[1] * du[2]) / inertia.i1, (g[0] * du[2] - g[2] * du[0]) / inertia.i2, 0.0),
        gamma: g.cross(&w),
    })
}

/// K₁ = ½(I₁ω₁² + I₂ω₂²) − U(γ), K₂ = ‖γ‖².
pub fn suslov_first_integrals(inertia: &Inertia, u: &ScalarField, s: &BodyState) -> Result<(f64, f64)> {
    let k1 = 0.5 * (inertia.i1 * s.omega[0].powi(2) + inertia.i2 * s.omega[1].powi(2)) - u.try_eval(&s.gamma)?;
    Ok((k1, s.gamma.norm_squared()))
}

/// μ₁, μ₂ as fields of γ.
#[derive(Debug, Clone)]
pub struct MuPair {
    pub mu1: ScalarField,
    pub mu2: ScalarField,
}

impl MuPair {
    pub fn new(mu1: ScalarField, mu2: ScalarField) -> Self {
        Self { mu1, mu2 }
    }

    /// U = (I₁μ₁² + I₂μ₂²)/(2 I₁ I₂) − h, which makes K₁ = h on the invariant set.
    pub fn potential(&self, inertia: &Inertia, h: f64) -> ScalarField {
        let (m1, m2, i) = (self.mu1.clone(), self.mu2.clone(), *inertia);
        ScalarField::new(move |g| {
            let (a, b) = (m1.eval(g), m2.eval(g));
            (i.i1 * a * a + i.i2 * b * b) / (2.0 * i.i1 * i.i2) - h
        })
    }

    /// ω with I₁ω₁ = μ₂, I₂ω₂ = −μ₁, ω₃ = 0.
    pub fn omega(&self, inertia: &Inertia, g: &Vec3) -> Result<Vec3> {
        Ok(Vec3::new(self.mu2.try_eval(g)? / inertia.i1, -self.mu1.try_eval(g)? / inertia.i2, 0.0))
    }

    pub fn state(&self, inertia: &Inertia, g: &Vec3) -> Result<BodyState> {
        Ok(BodyState { omega: self.omega(inertia, g)?, gamma: *g })
    }

    /// (I₁ω₁ − μ₂, I₂ω₂ + μ₁) at a body state.
    pub fn correspondence(&self, inertia: &Inertia, s: &BodyState) -> (f64, f64) {
        (
            inertia.i1 * s.omega[0] - self.mu2.eval(&s.gamma),
            inertia.i2 * s.omega[1] + self.mu1.eval(&s.gamma),
        )
    }
}

/// γ₃(∂₂μ₁ − ∂₁μ₂) − γ₂ ∂₃μ₁ + γ₁ ∂₃μ₂
pub fn mu_pde_residual(mp: &MuPair, g: &Vec3) -> Result<f64> {
    let d1 = grad(&mp.mu1, g)?;
    let d2 = grad(&mp.mu2, g)?;
    Ok(g[2] * (d1[1] - d2[0]) - g[1] * d1[2] + g[0] * d2[2])
}

/// γ̇ = (μ₁γ₃/I₂, μ₂γ₃/I₁, −(μ₁γ₁/I₂ + μ₂γ₂/I₁)); tangent to every sphere.
pub fn suslov_cartesian_field(inertia: &Inertia, mp: &MuPair, g: &Vec3) -> Result<Vec3> {
    let (m1, m2) = (mp.mu1.try_eval(g)?, mp.mu2.try_eval(g)?);
    let (i1, i2) = (inertia.i1, inertia.i2);
    Ok(Vec3::new(m1 * g[2] / i2, m2 * g[2] / i1, -(m1 * g[0] / i2 + m2 * g[1] / i1)))
}

/// The same flow on the Euler chart: (cos z λ₂, −λ₂, −λ₃) with
/// λ₂ = (I₁μ₁ cos x − I₂μ₂ sin x)/(I₁I₂ sin z), λ₃ = −μ₁ sin x/I₂ − μ₂ cos x/I₁.
pub fn suslov_angle_field(inertia: &Inertia, mp: &MuPair, e: &EulerState) -> Result<Vec3> {
    e.check()?;
    let g = gamma_of_angles(e);
    let (m1, m2) = (mp.mu1.try_eval(&g)?, mp.mu2.try_eval(&g)?);
    let (i1, i2) = (inertia.i1, inertia.i2);
    let (sx, cx) = e.x.sin_cos();
    let (sz, cz) = e.z.sin_cos();
    let l2 = (i1 * m1 * cx - i2 * m2 * sx) / (i1 * i2 * sz);
    let l3 = -m1 * sx / i2 - m2 * cx / i1;
    Ok(Vec3::new(cz * l2, -l2, -l3))
}

/// Constraint covector of ω₃ = 0 on the chart: ẋ + cos z ẏ = 0.
pub fn suslov_angle_constraint() -> VectorField {
    VectorField::new(|e| Vec3::new(1.0, e[2].cos(), 0.0))
}

/// (a, curl p) with p = G v on the chart; equals sin z times the μ-equation residual.
pub fn suslov_angle_condition(inertia: &Inertia, mp: &MuPair, e: &EulerState) -> Result<f64> {
    e.check()?;
    let (i, m) = (*inertia, mp.clone());
    let p = VectorField::new(move |q| {
        let es = EulerState::from_vec(q);
        match suslov_angle_field(&i, &m, &es) {
            Ok(v) => so3_metric_unchecked(&i, &es) * v,
            Err(_) => Vec3::repeat(f64::NAN),
        }
    })
    .with_step(1e-4);
    let c = covector_curl(&p, &e.to_vec())?;
    Ok(c[0] + e.z.cos() * c[1])
}

/// Integrable families of the μ equations.
#[derive(Clone)]
pub enum SubcaseSpec {
    /// μ = (C₁, C₂)
    Suslov { c1: f64, c2: f64 },
    /// μ_j = C_j √W/√N ± C I_k C_k/N with W = h̃ + C₁γ₁ + C₂γ₂, N = I₁C₁² + I₂C₂²
    KharlamovaZabelina { h_tilde: f64, c1: f64, c2: f64, c: f64 },
    /// I₁ = I₂; μ₁ = −γ₂C/u + γ₁D(u), μ₂ = γ₁C/u + γ₂D(u), u = γ₁² + γ₂²,
    /// D² = (h u² + γ₃ u − C²)/u²
    Kozlov { h: f64, c: f64 },
    /// μ₁ = √(h₁ + a₁(γ₂²+γ₃²) + b₁γ₁² + f₁(γ₁)), μ₂ likewise
    Tisserand { a1: f64, a2: f64, b1: f64, b2: f64, h1: f64, h2: f64, f1: Option<Fn1>, f2: Option<Fn1> },
    /// μ₁ = Ψ₁(γ₂² + γ₃², γ₁), μ₂ = Ψ₂(γ₁² + γ₃², γ₂)
    Separable { psi1: Fn2, psi2: Fn2 },
}

impl std::fmt::Debug for SubcaseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Suslov { c1, c2 } => write!(f, "Suslov {{ c1: {c1}, c2: {c2} }}"),
            Self::KharlamovaZabelina { h_tilde, c1, c2, c } => {
                write!(f, "KharlamovaZabelina {{ h_tilde: {h_tilde}, c1: {c1}, c2: {c2}, c: {c} }}")
            }
            Self::Kozlov { h, c } => write!(f, "Kozlov {{ h: {h}, c: {c} }}"),
            Self::Tisserand { a1, a2, b1, b2, h1, h2, .. } => {
                write!(f, "Tisserand {{ a1: {a1}, a2: {a2}, b1: {b1}, b2: {b2}, h1: {h1}, h2: {h2} }}")
            }
            Self::Separable { .. } => write!(f, "Separable"),
        }
    }
}

fn kz_norm(inertia: &Inertia, c1: f64, c2: f64) -> Result<f64> {
    let n = inertia.i1 * c1 * c1 + inertia.i2 * c2 * c2;
    if !(n > 0.0) {
        return Err(Error::InvalidInput("I1 C1^2 + I2 C2^2 must be positive".into()));
    }
    Ok(n)
}

/// Kozlov's P(γ₃) = h(1−γ₃²)² + γ₃(1−γ₃²) − C² = u² D(u)².
pub fn kozlov_p(h: f64, c: f64, g3: f64) -> f64 {
    let u = 1.0 - g3 * g3;
    h * u * u + g3 * u - c * c
}

pub fn subcase_mu(spec: &SubcaseSpec, inertia: &Inertia) -> Result<MuPair> {
    Ok(match spec.clone() {
        SubcaseSpec::Suslov { c1, c2 } => MuPair::new(ScalarField::constant(c1), ScalarField::constant(c2)),
        SubcaseSpec::KharlamovaZabelina { h_tilde, c1, c2, c } => {
            let n = kz_norm(inertia, c1, c2)?;
            let sn = n.sqrt();
            let (k1, k2) = (c * c2 * inertia.i2 / n, -c * c1 * inertia.i1 / n);
            let w = move |g: &Vec3| (h_tilde + c1 * g[0] + c2 * g[1]).sqrt();
            MuPair::new(
                ScalarField::new(move |g| c1 / sn * w(g) + k1)
                    .with_gradient(move |g| Vec3::new(c1 * c1, c1 * c2, 0.0) / (2.0 * sn * w(g))),
                ScalarField::new(move |g| c2 / sn * w(g) + k2)
                    .with_gradient(move |g| Vec3::new(c1 * c2, c2 * c2, 0.0) / (2.0 * sn * w(g))),
            )
        }
        SubcaseSpec::Kozlov { h, c } => {
            if !inertia.symmetric() {
                return Err(Error::InvalidInput("the Kozlov subcase needs I1 = I2".into()));
            }
            // γ₃ stands in for √(1 − u); the two agree on the upper hemisphere and
            // only values on the sphere enter the flow
            let d = move |g: &Vec3| {
                let u = g[0] * g[0] + g[1] * g[1];
                (h * u * u + g[2] * u - c * c).sqrt() / u
            };
            // ∂ₖD = γₖ (P_u/(√P u) − 2√P/u²) for k = 1, 2 and ∂₃D = 1/(2√P)
            let dd = move |g: &Vec3| {
                let u = g[0] * g[0] + g[1] * g[1];
                let sp = (h * u * u + g[2] * u - c * c).sqrt();
                let k = (2.0 * h * u + g[2]) / (sp * u) - 2.0 * sp / (u * u);
                (u, Vec3::new(g[0] * k, g[1] * k, 0.5 / sp))
            };
            MuPair::new(
                ScalarField::new(move |g| -g[1] * c / (g[0] * g[0] + g[1] * g[1]) + g[0] * d(g)).with_gradient(move |g| {
                    let (u, dg) = dd(g);
                    let w = 2.0 * c * g[1] / (u * u);
                    Vec3::new(w * g[0] + d(g), -c / u + w * g[1], 0.0) + g[0] * dg
                }),
                ScalarField::new(move |g| g[0] * c / (g[0] * g[0] + g[1] * g[1]) + g[1] * d(g)).with_gradient(move |g| {
                    let (u, dg) = dd(g);
                    let w = -2.0 * c * g[0] / (u * u);
                    Vec3::new(c / u + w * g[0], w * g[1] + d(g), 0.0) + g[1] * dg
                }),
            )
        }
        SubcaseSpec::Tisserand { a1, a2, b1, b2, h1, h2, f1, f2 } => {
            let exact = f1.is_none() && f2.is_none();
            let f1 = f1.unwrap_or_else(|| Arc::new(|_| 0.0));
            let f2 = f2.unwrap_or_else(|| Arc::new(|_| 0.0));
            let m1 = ScalarField::new(move |g| (h1 + a1 * (g[1] * g[1] + g[2] * g[2]) + b1 * g[0] * g[0] + f1(g[0])).sqrt());
            let m2 = ScalarField::new(move |g| (h2 + a2 * (g[0] * g[0] + g[2] * g[2]) + b2 * g[1] * g[1] + f2(g[1])).sqrt());
            if exact {
                let (e1, e2) = (m1.clone(), m2.clone());
                MuPair::new(
                    m1.with_gradient(move |g| Vec3::new(b1 * g[0], a1 * g[1], a1 * g[2]) / e1.eval(g)),
                    m2.with_gradient(move |g| Vec3::new(a2 * g[0], b2 * g[1], a2 * g[2]) / e2.eval(g)),
                )
            } else {
                MuPair::new(m1, m2)
            }
        }
        SubcaseSpec::Separable { psi1, psi2 } => MuPair::new(
            ScalarField::new(move |g| psi1(g[1] * g[1] + g[2] * g[2], g[0])),
            ScalarField::new(move |g| psi2(g[0] * g[0] + g[2] * g[2], g[1])),
        ),
    })
}

/// Closed-form and quadrature solutions of the integrable subcases, each
/// parametrized by s: s = t (Suslov), s = τ with dτ = γ₃ dt/(I₁I₂)
/// (Kharlamova–Zabelina, Tisserand) or s = γ₃ (Kozlov).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// φ = Ωt + α; γ = cos β ω̂ + sin β (sin φ e₁ + cos φ e₃)
    Suslov { c1: f64, c2: f64, alpha: f64, beta: f64 },
    /// γ_j = a_j u² + b_j u + d_j + b_j δ with u = u0 + τ > 0
    KharlamovaZabelina { h_tilde: f64, c1: f64, c2: f64, c: f64, shift: f64, u0: f64 },
    /// γ₃ decreasing from g3_0; x, y, t by quadrature in γ₃
    Kozlov { h: f64, c: f64, g3_0: f64, x0: f64 },
    /// γ_j = A_j sin(√(a_j − b_j) I_j τ + φ_j), A_j² = (h_j + a_j)/(a_j − b_j)
    Tisserand { a1: f64, a2: f64, b1: f64, b2: f64, h1: f64, h2: f64, phi1: f64, phi2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcasePoint {
    pub s: f64,
    pub t: f64,
    pub state: BodyState,
}

impl ClosedForm {
    pub fn spec(&self) -> SubcaseSpec {
        match *self {
            Self::Suslov { c1, c2, .. } => SubcaseSpec::Suslov { c1, c2 },
            Self::KharlamovaZabelina { h_tilde, c1, c2, c, .. } => SubcaseSpec::KharlamovaZabelina { h_tilde, c1, c2, c },
            Self::Kozlov { h, c, .. } => SubcaseSpec::Kozlov { h, c },
            Self::Tisserand { a1, a2, b1, b2, h1, h2, .. } => {
                SubcaseSpec::Tisserand { a1, a2, b1, b2, h1, h2, f1: None, f2: None }
            }
        }
    }

    /// The member of a subcase family passing through γ₀ at t = 0.
    /// Separable specs have no closed form and are rejected.
    pub fn from_initial(spec: &SubcaseSpec, inertia: &Inertia, g0: &Vec3) -> Result<Self> {
        if (g0.norm_squared() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("initial gamma must be a unit vector".into()));
        }
        let (i1, i2) = (inertia.i1, inertia.i2);
        match spec.clone() {
            SubcaseSpec::Suslov { c1, c2 } => {
                let np = ((i1 * c1).powi(2) + (i2 * c2).powi(2)).sqrt();
                if np == 0.0 {
                    return Err(Error::InvalidInput("C1 and C2 cannot both vanish".into()));
                }
                let w = Vec3::new(i2 * c2, -i1 * c1, 0.0) / np;
                let e1 = Vec3::new(i1 * c1, i2 * c2, 0.0) / np;
                let (a, b, c) = (g0.dot(&w), g0.dot(&e1), g0[2]);
                let beta = a.clamp(-1.0, 1.0).acos();
                let alpha = if b == 0.0 && c == 0.0 { 0.0 } else { b.atan2(c) };
                Ok(Self::Suslov { c1, c2, alpha, beta })
            }
            SubcaseSpec::KharlamovaZabelina { h_tilde, c1, c2, c } => {
                let n = kz_norm(inertia, c1, c2)?;
                if g0[2] <= 0.0 {
                    return Err(Error::Domain("the closed form covers gamma3 > 0".into()));
                }
                let w = h_tilde + c1 * g0[0] + c2 * g0[1];
                if !(w > 0.0) {
                    return Err(Error::Domain(format!("h~ + C1 g1 + C2 g2 = {w} must be positive")));
                }
                let u0 = 2.0 * (w / n).sqrt();
                let (b1, b2) = (c * i1 * i2 * c2 / n, -c * i1 * i2 * c1 / n);
                let r1 = g0[0] - i1 * c1 / 4.0 * u0 * u0 + h_tilde * i1 * c1 / n;
                let r2 = g0[1] - i2 * c2 / 4.0 * u0 * u0 + h_tilde * i2 * c2 / n;
                let bb = b1 * b1 + b2 * b2;
                let shift = if bb == 0.0 { 0.0 } else { (b1 * r1 + b2 * r2) / bb - u0 };
                Ok(Self::KharlamovaZabelina { h_tilde, c1, c2, c, shift, u0 })
            }
            SubcaseSpec::Kozlov { h, c } => {
                if !inertia.symmetric() {
                    return Err(Error::InvalidInput("the Kozlov subcase needs I1 = I2".into()));
                }
                if !(kozlov_p(h, c, g0[2]) > 0.0) {
                    return Err(Error::Domain("Kozlov radicand is not positive at the initial point".into()));
                }
                Ok(Self::Kozlov { h, c, g3_0: g0[2], x0: g0[0].atan2(g0[1]) })
            }
            SubcaseSpec::Tisserand { a1, a2, b1, b2, h1, h2, f1, f2 } => {
                if f1.is_some() || f2.is_some() {
                    return Err(Error::InvalidInput("the sine solution needs f1 = f2 = 0".into()));
                }
                if g0[2] <= 0.0 {
                    return Err(Error::Domain("the closed form covers gamma3 > 0".into()));
                }
                let mut phi = [0.0; 2];
                for (j, (a, b, hh)) in [(a1, b1, h1), (a2, b2, h2)].into_iter().enumerate() {
                    if !(a > b) || !(hh + a > 0.0) {
                        return Err(Error::Domain("Tisserand form needs a_j > b_j and h_j + a_j > 0".into()));
                    }
                    let s = g0[j] / ((hh + a) / (a - b)).sqrt();
                    if s.abs() >= 1.0 {
                        return Err(Error::TurningPoint(0.0));
                    }
                    phi[j] = s.asin();
                }
                Ok(Self::Tisserand { a1, a2, b1, b2, h1, h2, phi1: phi[0], phi2: phi[1] })
            }
            SubcaseSpec::Separable { .. } => {
                Err(Error::InvalidInput("separable subcases are solved by quadrature, not a closed form".into()))
            }
        }
    }

    /// Parameter value at t = 0.
    pub fn s0(&self) -> f64 {
        match *self {
            Self::Kozlov { g3_0, .. } => g3_0,
            _ => 0.0,
        }
    }

    pub fn state_at(&self, inertia: &Inertia, s: f64) -> Result<BodyState> {
        let mp = subcase_mu(&self.spec(), inertia)?;
        let g = self.gamma_at(inertia, s)?;
        mp.state(inertia, &g)
    }

    pub fn gamma_at(&self, inertia: &Inertia, s: f64) -> Result<Vec3> {
        let (i1, i2) = (inertia.i1, inertia.i2);
        match *self {
            Self::Suslov { c1, c2, alpha, beta } => {
                let np = ((i1 * c1).powi(2) + (i2 * c2).powi(2)).sqrt();
                if np == 0.0 {
                    return Err(Error::InvalidInput("C1 and C2 cannot both vanish".into()));
                }
                let phi = np / (i1 * i2) * s + alpha;
                let w = Vec3::new(i2 * c2, -i1 * c1, 0.0) / np;
                let e1 = Vec3::new(i1 * c1, i2 * c2, 0.0) / np;
                Ok(beta.cos() * w + beta.sin() * (phi.sin() * e1 + phi.cos() * Vec3::z()))
            }
            Self::KharlamovaZabelina { h_tilde, c1, c2, c, shift, u0 } => {
                let n = kz_norm(inertia, c1, c2)?;
                let u = u0 + s;
                if u <= 0.0 {
                    return Err(Error::Domain(format!("u = {u} must stay positive")));
                }
                let (a1, a2) = (i1 * c1 / 4.0, i2 * c2 / 4.0);
                let (b1, b2) = (c * i1 * i2 * c2 / n, -c * i1 * i2 * c1 / n);
                let (d1, d2) = (-h_tilde * i1 * c1 / n, -h_tilde * i2 * c2 / n);
                let g1 = a1 * u * u + b1 * (u + shift) + d1;
                let g2 = a2 * u * u + b2 * (u + shift) + d2;
                let r = 1.0 - g1 * g1 - g2 * g2;
                if r <= 0.0 {
                    return Err(Error::TurningPoint(s));
                }
                Ok(Vec3::new(g1, g2, r.sqrt()))
            }
            Self::Kozlov { h, c, g3_0, x0 } => {
                let p = kozlov_p(h, c, s);
                if !(p > 0.0) || s.abs() >= 1.0 {
                    return Err(Error::TurningPoint(s));
                }
                let dx = move |g: f64| c * g / ((1.0 - g * g) * kozlov_p(h, c, g).sqrt());
                let x = x0 + quad(dx, g3_0, s, QTOL)?;
                let sz = (1.0 - s * s).sqrt();
                Ok(Vec3::new(sz * x.sin(), sz * x.cos(), s))
            }
            Self::Tisserand { a1, a2, b1, b2, h1, h2, phi1, phi2 } => {
                let mut g = [0.0; 2];
                for (j, (a, b, hh, ph, ij)) in [(a1, b1, h1, phi1, i1), (a2, b2, h2, phi2, i2)].into_iter().enumerate() {
                    if !(a > b) || !(hh + a >= 0.0) {
                        return Err(Error::Domain("Tisserand form needs a_j > b_j and h_j + a_j >= 0".into()));
                    }
                    let k = (a - b).sqrt();
                    let arg = k * ij * s + ph;
                    if arg.cos() <= 0.0 {
                        return Err(Error::TurningPoint(s));
                    }
                    g[j] = ((hh + a) / (a - b)).sqrt() * arg.sin();
                }
                let r = 1.0 - g[0] * g[0] - g[1] * g[1];
                if r <= 0.0 {
                    return Err(Error::TurningPoint(s));
                }
                Ok(Vec3::new(g[0], g[1], r.sqrt()))
            }
        }
    }

    /// dt/ds along the solution.
    pub fn dt_ds(&self, inertia: &Inertia, s: f64) -> Result<f64> {
        match *self {
            Self::Suslov { .. } => Ok(1.0),
            Self::Kozlov { h, c, .. } => {
                let p = kozlov_p(h, c, s);
                if !(p > 0.0) {
                    return Err(Error::TurningPoint(s));
                }
                Ok(-inertia.i1 / p.sqrt())
            }
            _ => Ok(inertia.i1 * inertia.i2 / self.gamma_at(inertia, s)?[2]),
        }
    }

    /// t(s) by quadrature from s0.
    pub fn time_at(&self, inertia: &Inertia, s: f64) -> Result<f64> {
        if let Self::Suslov { .. } = self {
            return Ok(s);
        }
        self.gamma_at(inertia, s)?;
        let i = *inertia;
        let me = *self;
        quad(move |q| me.dt_ds(&i, q).unwrap_or(f64::NAN), self.s0(), s, QTOL)
    }

    /// Parameter value reached at time t (t ≥ 0), by bracketing then root finding.
    pub fn s_at_time(&self, inertia: &Inertia, t: f64) -> Result<f64> {
        if let Self::Suslov { .. } = self {
            return Ok(t);
        }
        let s0 = self.s0();
        if t == 0.0 {
            return Ok(s0);
        }
        let dir = self.dt_ds(inertia, s0)?.signum();
        let (mut lo, mut step) = (s0, 0.05);
        let mut t_lo = 0.0;
        loop {
            let hi = lo + dir * step;
            let t_hi = match self.time_at(inertia, hi) {
                Ok(v) if v.is_finite() => v,
                _ if step > 1e-9 => {
                    step *= 0.5;
                    continue;
                }
                _ => return Err(Error::TurningPoint(lo)),
            };
            if t_hi >= t {
                return find_root(|s| Ok(self.time_at(inertia, s)? - t), lo, hi, 1e-14);
            }
            if t_hi <= t_lo {
                return Err(Error::TurningPoint(hi));
            }
            lo = hi;
            t_lo = t_hi;
            step *= 1.5;
        }
    }

    /// Samples on an even s-grid from s0 to s_end, with t accumulated piecewise.
    pub fn path(&self, inertia: &Inertia, s_end: f64, samples: usize) -> Result<Vec<SubcasePoint>> {
        if samples < 2 {
            return Err(Error::InvalidInput("path needs at least two samples".into()));
        }
        let (i, me) = (*inertia, *self);
        let s0 = self.s0();
        let mut out = Vec::with_capacity(samples);
        let mut t = 0.0;
        let mut prev = s0;
        for k in 0..samples {
            let s = s0 + (s_end - s0) * k as f64 / (samples - 1) as f64;
            if k > 0 {
                t += match self {
                    Self::Suslov { .. } => s - prev,
                    _ => quad(|q| me.dt_ds(&i, q).unwrap_or(f64::NAN), prev, s, QTOL)?,
                };
            }
            out.push(SubcasePoint { s, t, state: self.state_at(inertia, s)? });
            prev = s;
        }
        Ok(out)
    }

    /// Largest mismatch between d/dt of the closed form (5-point stencil in s)
    /// and the right-hand side of the equations of motion with U from the μ pair.
    pub fn ode_residual(&self, inertia: &Inertia, s: f64, h_energy: f64) -> Result<f64> {
        let mp = subcase_mu(&self.spec(), inertia)?;
        let u = mp.potential(inertia, h_energy);
        let st = self.state_at(inertia, s)?;
        let rhs = suslov_classical_rhs(inertia, &u, &st)?;
        let d = 1e-3 * match self {
            Self::Suslov { .. } => 1.0,
            Self::Kozlov { .. } => 1.0,
            _ => 0.1,
        };
        let f = |q: f64| self.state_at(inertia, q).map(|b| b.to_vec());
        let (p2, p1, m1, m2) = (f(s + 2.0 * d)?, f(s + d)?, f(s - d)?, f(s - 2.0 * d)?);
        let ds_dt = 1.0 / self.dt_ds(inertia, s)?;
        let want = rhs.to_vec();
        let mut worst = 0.0f64;
        for k in 0..6 {
            let deriv = (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * d) * ds_dt;
            worst = worst.max((deriv - want[k]).abs());
        }
        Ok(worst)
    }
}

/// Sign choice for the square root D in the Kozlov subcase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Self::Positive => 1.0,
            Self::Negative => -1.0,
        }
    }
}

/// Euler-angle rates of the Kozlov flow (I₁ = I₂ = I):
/// ẋ = −C cos z/(I sin²z), ẏ = C/(I sin²z), ż = ±D sin z/I with D = D(sin²z) ≥ 0.
pub fn kozlov_field(inertia: &Inertia, h: f64, c: f64, e: &EulerState, branch: Branch) -> Result<Vec3> {
    e.check()?;
    if !inertia.symmetric() {
        return Err(Error::InvalidInput("the Kozlov subcase needs I1 = I2".into()));
    }
    let (sz, cz) = e.z.sin_cos();
    let u = sz * sz;
    let p = kozlov_p(h, c, cz);
    if p < 0.0 {
        return Err(Error::Domain(format!("Kozlov radicand {p:e} is negative at z = {}", e.z)));
    }
    let d = branch.sign() * p.sqrt() / u;
    let i = inertia.i1;
    Ok(Vec3::new(-c * cz / (i * u), c / (i * u), d * sz / i))
}

/// Samples of the separable reduction: ∫dγ_j/F_j = I_j τ for j = 1, 2,
/// γ₃ = √(1 − γ₁² − γ₂²), t = I₁I₂ ∫dτ/γ₃.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparablePath {
    pub tau: Vec<f64>,
    pub times: Vec<f64>,
    pub gamma: Vec<Vec3>,
}

impl SeparablePath {
    pub fn to_trajectory(&self, inertia: &Inertia, mp: &MuPair) -> Result<Trajectory> {
        let mut tr = Trajectory {
            times: self.times.clone(),
            states: Vec::with_capacity(self.tau.len()),
            derivatives: Vec::with_capacity(self.tau.len()),
            diagnostics: Vec::new(),
            termination: Termination::Completed,
            steps: self.tau.len().saturating_sub(1),
        };
        for g in &self.gamma {
            tr.states.push(g.as_slice().to_vec());
            tr.derivatives.push(suslov_cartesian_field(inertia, mp, g)?.as_slice().to_vec());
        }
        Ok(tr)
    }
}

/// Solve ∫_{g0}^{g} dq/F(q) = target by safeguarded Newton (F > 0 required).
fn invert_quadrature(f: &Fn1, g0: f64, target: f64) -> Result<f64> {
    if target == 0.0 {
        return Ok(g0);
    }
    let f0 = f(g0);
    if !(f0 > 0.0) {
        return Err(Error::TurningPoint(g0));
    }
    let mut g = g0 + target * f0;
    for _ in 0..60 {
        if !(g.abs() < 1.0) || !(f(g) > 0.0) {
            // back off towards g0 until F is positive again
            g = 0.5 * (g + g0);
            if (g - g0).abs() < 1e-15 {
                return Err(Error::TurningPoint(g0));
            }
            continue;
        }
        let phi = quad(|q| 1.0 / f(q), g0, g, QTOL)?;
        let step = (phi - target) * f(g);
        g -= step;
        if step.abs() <= 1e-15 * (1.0 + g.abs()) {
            if !(f(g) > 0.0) || g.abs() >= 1.0 {
                return Err(Error::TurningPoint(g));
            }
            return Ok(g);
        }
    }
    Err(Error::Domain("separable quadrature inversion did not converge".into()))
}

/// γ_j(τ) from the reduced one-dimensional quadratures; F_j(γ₀) = 0 freezes γ_j.
pub fn separable_quadrature(
    f1: &Fn1,
    f2: &Fn1,
    inertia: &Inertia,
    g0: (f64, f64),
    tau_end: f64,
    samples: usize,
) -> Result<SeparablePath> {
    if samples < 2 || !(tau_end > 0.0) {
        return Err(Error::InvalidInput("separable quadrature needs tau_end > 0 and two samples".into()));
    }
    let comps = [(f1.clone(), g0.0, inertia.i1), (f2.clone(), g0.1, inertia.i2)];
    let frozen: Vec<bool> = comps.iter().map(|(f, g, _)| f(*g) == 0.0).collect();
    let solve = |tau: f64, from: (f64, f64, f64)| -> Result<(f64, f64)> {
        let mut out = [0.0; 2];
        for j in 0..2 {
            let (f, _, ij) = &comps[j];
            let start = if j == 0 { from.1 } else { from.2 };
            out[j] = if frozen[j] { start } else { invert_quadrature(f, start, ij * (tau - from.0))? };
        }
        Ok((out[0], out[1]))
    };
    let g3 = |g1: f64, g2: f64, tau: f64| -> Result<f64> {
        let r = 1.0 - g1 * g1 - g2 * g2;
        if r <= 0.0 {
            return Err(Error::TurningPoint(tau));
        }
        Ok(r.sqrt())
    };
    // 5-point Gauss–Legendre nodes on [0, 1]
    const GL: [(f64, f64); 5] = [
        (0.046_910_077_030_668, 0.118_463_442_528_095),
        (0.230_765_344_947_158, 0.239_314_335_249_683),
        (0.5, 0.284_444_444_444_444_4),
        (0.769_234_655_052_842, 0.239_314_335_249_683),
        (0.953_089_922_969_332, 0.118_463_442_528_095),
    ];
    let k = inertia.i1 * inertia.i2;
    let mut path = SeparablePath { tau: Vec::new(), times: Vec::new(), gamma: Vec::new() };
    let mut node = (0.0, g0.0, g0.1);
    let mut t = 0.0;
    path.tau.push(0.0);
    path.times.push(0.0);
    path.gamma.push(Vec3::new(g0.0, g0.1, g3(g0.0, g0.1, 0.0)?));
    for n in 1..samples {
        let tau = tau_end * n as f64 / (samples - 1) as f64;
        let h = tau - node.0;
        let mut acc = 0.0;
        for (x, w) in GL {
            let tq = node.0 + x * h;
            let (a, b) = solve(tq, node)?;
            acc += w / g3(a, b, tq)?;
        }
        t += k * h * acc;
        let (a, b) = solve(tau, node)?;
        node = (tau, a, b);
        path.tau.push(tau);
        path.times.push(t);
        path.gamma.push(Vec3::new(a, b, g3(a, b, tau)?));
    }
    Ok(path)
}

/// Veselov problem with angle-space field (λ₂, −cos z λ₂ − a, λ₃), which keeps
/// (γ, ω) = −a and reproduces the ω formulas below.
#[derive(Clone)]
pub struct VeselovSpec {
    pub inertia: Inertia,
    pub a: f64,
    /// λ₂(x, z)
    pub l2: Fn2,
    /// λ₃(x, z)
    pub l3: Fn2,
}

impl std::fmt::Debug for VeselovSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VeselovSpec").field("inertia", &self.inertia).field("a", &self.a).finish_non_exhaustive()
    }
}

/// Symmetric closed form (I₁ = I₂ = I): λ₃ = sin z C(z),
/// √Q sin²z λ₂ = aΩ(z) + K(x), Q = I₃ sin²z + I cos²z,
/// Ω' = −sin z (I₃ + 2 cos²z (I − I₃))/√Q, Ω(π/2) = 0.
#[derive(Clone)]
pub struct SymmetricVeselov {
    pub spec: VeselovSpec,
    pub c: Fn1,
    pub k: Fn1,
}

impl std::fmt::Debug for SymmetricVeselov {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetricVeselov").field("spec", &self.spec).finish_non_exhaustive()
    }
}

fn q_of(inertia: &Inertia, z: f64) -> f64 {
    inertia.i3 * z.sin().powi(2) + inertia.i1 * z.cos().powi(2)
}

pub fn veselov_omega_prime(inertia: &Inertia, z: f64) -> f64 {
    let (sz, cz) = z.sin_cos();
    -sz * (inertia.i3 + 2.0 * cz * cz * (inertia.i1 - inertia.i3)) / q_of(inertia, z).sqrt()
}

/// Ω(z) = ∫_{π/2}^{z} Ω'.
pub fn veselov_big_omega(inertia: &Inertia, z: f64) -> Result<f64> {
    let i = *inertia;
    integrate_default(move |q| veselov_omega_prime(&i, q), FRAC_PI_2, z)
}

impl SymmetricVeselov {
    pub fn new(inertia: Inertia, a: f64, c: Fn1, k: Fn1) -> Result<Self> {
        if !inertia.symmetric() {
            return Err(Error::InvalidInput("the symmetric Veselov solution needs I1 = I2".into()));
        }
        let (cc, kk) = (c.clone(), k.clone());
        let l3: Fn2 = Arc::new(move |_, z| z.sin() * cc(z));
        let l2: Fn2 = Arc::new(move |x, z| {
            let om = if a == 0.0 { 0.0 } else { veselov_big_omega(&inertia, z).unwrap_or(f64::NAN) };
            (a * om + kk(x)) / (q_of(&inertia, z).sqrt() * z.sin().powi(2))
        });
        Ok(Self { spec: VeselovSpec { inertia, a, l2, l3 }, c, k })
    }

    /// Q (ω₃ + aγ₃)² − (aΩ(z) + K(x)), evaluated with a body state and the chart point.
    pub fn invariant(&self, e: &EulerState, omega: &Vec3) -> Result<f64> {
        e.check()?;
        let a = self.spec.a;
        let g = gamma_of_angles(e);
        let om = if a == 0.0 { 0.0 } else { veselov_big_omega(&self.spec.inertia, e.z)? };
        Ok(q_of(&self.spec.inertia, e.z) * (omega[2] + a * g[2]).powi(2) - (a * om + (self.k)(e.x)).powi(2))
    }
}

pub fn veselov_field(vs: &VeselovSpec, e: &EulerState) -> Result<Vec3> {
    e.check()?;
    let (l2, l3) = ((vs.l2)(e.x, e.z), (vs.l3)(e.x, e.z));
    if !(l2.is_finite() && l3.is_finite()) {
        return Err(Error::Domain(format!("lambda pair is not finite at {:?}", arr(&e.to_vec()))));
    }
    Ok(Vec3::new(l2, -e.z.cos() * l2 - vs.a, l3))
}

/// ∂ₓp₃ − ∂_z p₁ + cos z (∂_z p₂ − ∂_y p₃) with p = G v; equals −(a, curl p)
/// for the constraint covector a = (cos z, 1, 0).
pub fn veselov_condition_residual(vs: &VeselovSpec, e: &EulerState) -> Result<f64> {
    e.check()?;
    let v = vs.clone();
    let p = VectorField::new(move |q| {
        let es = EulerState::from_vec(q);
        match veselov_field(&v, &es) {
            Ok(f) => so3_metric_unchecked(&v.inertia, &es) * f,
            Err(_) => Vec3::repeat(f64::NAN),
        }
    })
    .with_step(1e-4);
    let c = covector_curl(&p, &e.to_vec())?;
    Ok(-(e.z.cos() * c[0] + c[1]))
}

/// ω along the field: (γ₂λ₃/sin z − γ₁γ₃λ₂ − aγ₁, −γ₁λ₃/sin z − γ₂γ₃λ₂ − aγ₂, sin²z λ₂ − aγ₃).
pub fn veselov_omega_integrals(vs: &VeselovSpec, e: &EulerState) -> Result<Vec3> {
    let rates = veselov_field(vs, e)?;
    let (l2, l3) = (rates[0], rates[2]);
    let g = gamma_of_angles(e);
    let sz = e.z.sin();
    let a = vs.a;
    Ok(Vec3::new(
        g[1] * l3 / sz - g[0] * g[2] * l2 - a * g[0],
        -g[0] * l3 / sz - g[1] * g[2] * l2 - a * g[1],
        sz * sz * l2 - a * g[2],
    ))
}

/// Veselov constraint covector (cos z, 1, 0) on the chart.
pub fn veselov_angle_constraint() -> VectorField {
    VectorField::new(|e| Vec3::new(e[2].cos(), 1.0, 0.0))
}

/// U(γ) = ½ (I ω(γ), ω(γ)) − h with ω(γ) from the field: the force function
/// for which the field's integral curves are motions of the body.
pub fn veselov_potential(vs: &VeselovSpec, h: f64) -> ScalarField {
    let v = vs.clone();
    ScalarField::new(move |g| {
        let e = angles_of_gamma(g);
        match veselov_omega_integrals(&v, &e) {
            Ok(w) => 0.5 * w.component_mul(&v.inertia.diag()).dot(&w) - h,
            Err(_) => f64::NAN,
        }
    })
}

/// I ω̇ = Iω × ω + U_γ × γ + λγ, γ̇ = γ × ω, with λ keeping (γ, ω) fixed.
pub fn veselov_classical_rhs(inertia: &Inertia, u: &ScalarField, s: &BodyState) -> Result<BodyState> {
    let d = inertia.diag();
    let (w, g) = (s.omega, s.gamma);
    let du = grad(u, &g)?;
    let base = d.component_mul(&w).cross(&w) + du.cross(&g);
    let lam = -g.dot(&base.component_div(&d)) / g.dot(&g.component_div(&d));
    Ok(BodyState { omega: (base + lam * g).component_div(&d), gamma: g.cross(&w) })
}

fn near_pole(g: &Vec3) -> Option<String> {
    let n = g.norm();
    let sz = (g[0] * g[0] + g[1] * g[1]).sqrt() / n;
    (sz < POLE_MARGIN).then(|| format!("within {POLE_MARGIN} of a pole of the Euler chart (sin z = {sz:e})"))
}

/// Suslov flow on the Poisson sphere: state γ.
#[derive(Debug, Clone)]
pub struct SuslovCartesian {
    pub inertia: Inertia,
    pub mu: MuPair,
    pub h: f64,
}

impl OdeSystem for SuslovCartesian {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let v = suslov_cartesian_field(&self.inertia, &self.mu, &Vec3::new(y[0], y[1], y[2]))?;
        dy.copy_from_slice(v.as_slice());
        Ok(())
    }
}

impl Formulation for SuslovCartesian {
    fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>> {
        check_gamma(x0)?;
        Ok(x0.to_vec())
    }

    fn position(&self, y: &[f64]) -> Vec<f64> {
        y[..3].to_vec()
    }

    fn invariants(&self) -> Vec<Monitor> {
        let (i, mp) = (self.inertia, self.mu.clone());
        let u = self.mu.potential(&self.inertia, self.h);
        vec![
            Monitor::new("K1", move |y| {
                let g = Vec3::new(y[0], y[1], y[2]);
                match mp.state(&i, &g) {
                    Ok(s) => suslov_first_integrals(&i, &u, &s).map(|k| k.0).unwrap_or(f64::NAN),
                    Err(_) => f64::NAN,
                }
            }),
            Monitor::new("K2", |y| y[0] * y[0] + y[1] * y[1] + y[2] * y[2]),
        ]
    }
}

fn check_gamma(x0: &[f64]) -> Result<()> {
    if x0.len() != 3 {
        return Err(Error::InvalidInput(format!("expected gamma with 3 components, got {}", x0.len())));
    }
    let n = x0.iter().map(|v| v * v).sum::<f64>();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("|gamma|^2 = {n} is not 1")));
    }
    Ok(())
}

/// Classical Suslov equations, state (ω₁, ω₂, γ₁, γ₂, γ₃), started from the
/// μ correspondence.
#[derive(Debug, Clone)]
pub struct SuslovClassical {
    pub inertia: Inertia,
    pub mu: MuPair,
    pub u: ScalarField,
}

impl SuslovClassical {
    pub fn new(inertia: Inertia, mu: MuPair, h: f64) -> Self {
        let u = mu.potential(&inertia, h);
        Self { inertia, mu, u }
    }

    fn body(y: &[f64]) -> BodyState {
        BodyState { omega: Vec3::new(y[0], y[1], 0.0), gamma: Vec3::new(y[2], y[3], y[4]) }
    }
}

impl OdeSystem for SuslovClassical {
    fn dim(&self) -> usize {
        5
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let d = suslov_classical_rhs(&self.inertia, &self.u, &Self::body(y))?;
        dy[0] = d.omega[0];
        dy[1] = d.omega[1];
        dy[2..].copy_from_slice(d.gamma.as_slice());
        Ok(())
    }
}

impl Formulation for SuslovClassical {
    fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>> {
        check_gamma(x0)?;
        let g = Vec3::new(x0[0], x0[1], x0[2]);
        let w = self.mu.omega(&self.inertia, &g)?;
        Ok(vec![w[0], w[1], g[0], g[1], g[2]])
    }

    fn position(&self, y: &[f64]) -> Vec<f64> {
        y[2..5].to_vec()
    }

    fn invariants(&self) -> Vec<Monitor> {
        let (i, u) = (self.inertia, self.u.clone());
        vec![
            Monitor::new("K1", move |y| suslov_first_integrals(&i, &u, &Self::body(y)).map(|k| k.0).unwrap_or(f64::NAN)),
            Monitor::new("K2", |y| y[2] * y[2] + y[3] * y[3] + y[4] * y[4]),
        ]
    }

    fn constraints(&self) -> Vec<Monitor> {
        let (i1, mp1) = (self.inertia, self.mu.clone());
        let (i2, mp2) = (self.inertia, self.mu.clone());
        vec![
            Monitor::new("I1w1-mu2", move |y| mp1.correspondence(&i1, &Self::body(y)).0),
            Monitor::new("I2w2+mu1", move |y| mp2.correspondence(&i2, &Self::body(y)).1),
        ]
    }
}

/// Field on the Euler chart as a formulation whose position is γ.
#[derive(Clone)]
pub struct AngleFlow {
    field: Arc<dyn Fn(&EulerState) -> Result<Vec3> + Send + Sync>,
    invariants: Vec<Monitor>,
}

impl std::fmt::Debug for AngleFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AngleFlow")
    }
}

impl AngleFlow {
    pub fn new(field: impl Fn(&EulerState) -> Result<Vec3> + Send + Sync + 'static) -> Self {
        Self { field: Arc::new(field), invariants: Vec::new() }
    }

    pub fn with_invariant(mut self, m: Monitor) -> Self {
        self.invariants.push(m);
        self
    }

    pub fn veselov(vs: &VeselovSpec) -> Self {
        let v = vs.clone();
        let vc = vs.clone();
        Self::new(move |e| veselov_field(&v, e)).with_invariant(Monitor::new("(gamma,omega)", move |y| {
            let e = EulerState::new(y[0], y[1], y[2]);
            veselov_omega_integrals(&vc, &e).map(|w| gamma_of_angles(&e).dot(&w)).unwrap_or(f64::NAN)
        }))
    }

    pub fn kozlov(inertia: &Inertia, h: f64, c: f64, branch: Branch) -> Self {
        let i = *inertia;
        Self::new(move |e| kozlov_field(&i, h, c, e, branch))
    }
}

impl OdeSystem for AngleFlow {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let v = (self.field)(&EulerState::new(y[0], y[1], y[2]))?;
        dy.copy_from_slice(v.as_slice());
        Ok(())
    }

    fn boundary(&self, y: &[f64]) -> Option<String> {
        near_pole(&gamma_of_angles(&EulerState::new(y[0], y[1], y[2])))
    }
}

impl Formulation for AngleFlow {
    fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>> {
        if x0.len() != 3 {
            return Err(Error::InvalidInput(format!("expected Euler angles (x, y, z), got {} values", x0.len())));
        }
        EulerState::new(x0[0], x0[1], x0[2]).check()?;
        Ok(x0.to_vec())
    }

    fn position(&self, y: &[f64]) -> Vec<f64> {
        gamma_of_angles(&EulerState::new(y[0], y[1], y[2])).as_slice().to_vec()
    }

    fn invariants(&self) -> Vec<Monitor> {
        self.invariants.clone()
    }
}

/// Classical Veselov–Fedorov body with the force function of a field,
/// started from the field's ω at the given Euler angles.
#[derive(Debug, Clone)]
pub struct VeselovClassical {
    pub spec: VeselovSpec,
    pub u: ScalarField,
    pub h: f64,
}

impl VeselovClassical {
    pub fn new(spec: VeselovSpec, h: f64) -> Self {
        let u = veselov_potential(&spec, h);
        Self { spec, u, h }
    }
}

impl OdeSystem for VeselovClassical {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let d = veselov_classical_rhs(&self.spec.inertia, &self.u, &BodyState::from_slice(y))?;
        dy.copy_from_slice(&d.to_vec());
        Ok(())
    }

    fn boundary(&self, y: &[f64]) -> Option<String> {
        near_pole(&Vec3::new(y[3], y[4], y[5]))
    }
}

impl Formulation for VeselovClassical {
    fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>> {
        if x0.len() != 3 {
            return Err(Error::InvalidInput("expected Euler angles (x, y, z)".into()));
        }
        let e = EulerState::new(x0[0], x0[1], x0[2]);
        let w = veselov_omega_integrals(&self.spec, &e)?;
        Ok(BodyState { omega: w, gamma: gamma_of_angles(&e) }.to_vec())
    }

    fn position(&self, y: &[f64]) -> Vec<f64> {
        y[3..6].to_vec()
    }

    fn invariants(&self) -> Vec<Monitor> {
        let (i, u) = (self.spec.inertia, self.u.clone());
        vec![
            Monitor::new("energy", move |y| {
                let s = BodyState::from_slice(y);
                0.5 * s.omega.component_mul(&i.diag()).dot(&s.omega) - u.eval(&s.gamma)
            }),
            Monitor::new("(gamma,omega)", |y| {
                let s = BodyState::from_slice(y);
                s.gamma.dot(&s.omega)
            }),
            Monitor::new("K2", |y| y[3] * y[3] + y[4] * y[4] + y[5] * y[5]),
        ]
    }
}
