//! Numerical integration, drift monitoring and cross-validation of the
//! first-order (Cartesian) and second-order (classical) formulations.

mod ode;
pub mod quad;

use std::sync::Arc;

pub use ode::{
    integrate, Diagnostic, DiagnosticKind, FnSystem, IntegratorConfig, Method, Monitor, OdeSystem, Termination, Trajectory,
};

use crate::error::{Error, Result};
use crate::veccalc::{jacobian, Mat3, Vec3, VectorField};

fn v3(y: &[f64]) -> Vec3 {
    Vec3::new(y[0], y[1], y[2])
}

/// Adapter turning a fallible ℝ³ field into an [`OdeSystem`].
pub struct FieldSystem<F> {
    field: F,
}

impl<F: Fn(&Vec3) -> Result<Vec3> + Send + Sync> FieldSystem<F> {
    pub fn new(field: F) -> Self {
        Self { field }
    }
}

impl<F: Fn(&Vec3) -> Result<Vec3> + Send + Sync> OdeSystem for FieldSystem<F> {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let v = (self.field)(&v3(y))?;
        dy.copy_from_slice(v.as_slice());
        Ok(())
    }
}

/// Integrate ẋ = v(x) in ℝ³.
pub fn integrate_first_order<F>(field: F, x0: &Vec3, cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: Fn(&Vec3) -> Result<Vec3> + Send + Sync,
{
    let sys = FieldSystem::new(field);
    let v0 = (sys.field)(x0)?;
    if !v0.iter().all(|c| c.is_finite()) {
        return Err(Error::Domain("field is not finite at the initial point".into()));
    }
    integrate(&sys, x0.as_slice(), cfg)
}

type ForceFn = Arc<dyn Fn(&Vec3, &Vec3) -> Result<Vec3> + Send + Sync>;

/// M ẍ = F(x, ẋ) + μ a(x) with (a, ẋ) = 0; the multiplier is eliminated by
/// differentiating the constraint once. State layout: (x, ẋ).
#[derive(Clone)]
pub struct ConstrainedSystem {
    m_inv: Mat3,
    force: ForceFn,
    a: VectorField,
}

impl ConstrainedSystem {
    pub fn new(mass: Mat3, force: impl Fn(&Vec3, &Vec3) -> Result<Vec3> + Send + Sync + 'static, a: VectorField) -> Result<Self> {
        let m_inv = mass
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("mass matrix is singular".into()))?;
        Ok(Self { m_inv, force: Arc::new(force), a })
    }

    pub fn multiplier(&self, x: &Vec3, xd: &Vec3) -> Result<f64> {
        let a = self.a.try_eval(x)?;
        let mia = self.m_inv * a;
        let den = a.dot(&mia);
        if den.abs() <= 1e-300 || !den.is_finite() {
            return Err(Error::IllPosedConstraint);
        }
        let f = (self.force)(x, xd)?;
        let da = jacobian(&self.a, x)?;
        Ok(-(a.dot(&(self.m_inv * f)) + xd.dot(&(da * xd))) / den)
    }

    pub fn acceleration(&self, x: &Vec3, xd: &Vec3) -> Result<Vec3> {
        let mu = self.multiplier(x, xd)?;
        let f = (self.force)(x, xd)?;
        Ok(self.m_inv * (f + mu * self.a.try_eval(x)?))
    }

    pub fn constraint_residual(&self, y: &[f64]) -> f64 {
        self.a.eval(&v3(y)).dot(&v3(&y[3..]))
    }
}

impl OdeSystem for ConstrainedSystem {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (x, xd) = (v3(y), v3(&y[3..]));
        let acc = self.acceleration(&x, &xd)?;
        dy[..3].copy_from_slice(xd.as_slice());
        dy[3..].copy_from_slice(acc.as_slice());
        Ok(())
    }

    /// M-orthogonal projection of the velocity onto {(a, ẋ) = 0}.
    fn project(&self, y: &mut [f64]) {
        let (x, xd) = (v3(y), v3(&y[3..]));
        let a = self.a.eval(&x);
        let mia = self.m_inv * a;
        let den = a.dot(&mia);
        if den > 0.0 && den.is_finite() {
            let xd = xd - (a.dot(&xd) / den) * mia;
            y[3..].copy_from_slice(xd.as_slice());
        }
    }
}

/// Integrate the constrained second-order system from (x₀, ẋ₀).
pub fn integrate_constrained_second_order(
    sys: &ConstrainedSystem,
    x0: &Vec3,
    xdot0: &Vec3,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let a = sys.a.try_eval(x0)?;
    let r = a.dot(xdot0);
    if r.abs() > 1e-9 * (1.0 + a.norm() * xdot0.norm()) {
        return Err(Error::ConstraintViolated(r));
    }
    let y0 = [x0[0], x0[1], x0[2], xdot0[0], xdot0[1], xdot0[2]];
    integrate(sys, &y0, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub name: String,
    pub initial: f64,
    pub max_abs: f64,
    pub max_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriftReport {
    pub entries: Vec<Drift>,
}

impl DriftReport {
    pub fn get(&self, name: &str) -> Option<&Drift> {
        self.entries.iter().find(|d| d.name == name)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|d| d.max_abs).fold(0.0, f64::max)
    }
}

/// Per-invariant max |I(y(t)) − I(y(0))| and the same relative to |I(y(0))|.
pub fn drift_report(traj: &Trajectory, invariants: &[Monitor]) -> DriftReport {
    let entries = invariants
        .iter()
        .map(|m| {
            let initial = traj.states.first().map(|y| m.eval(y)).unwrap_or(f64::NAN);
            let max_abs = traj
                .states
                .iter()
                .map(|y| (m.eval(y) - initial).abs())
                .fold(0.0, |acc: f64, d| if d.is_nan() { f64::NAN } else { acc.max(d) });
            let max_rel = max_abs / initial.abs().max(f64::MIN_POSITIVE);
            Drift { name: m.name.clone(), initial, max_abs, max_rel }
        })
        .collect();
    DriftReport { entries }
}

/// One side of a cross-validation: a system, how to build its initial state
/// from configuration-space coordinates, and how to read positions back.
pub trait Formulation: OdeSystem {
    fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>>;

    fn position(&self, y: &[f64]) -> Vec<f64>;

    fn invariants(&self) -> Vec<Monitor> {
        Vec::new()
    }

    fn constraints(&self) -> Vec<Monitor> {
        Vec::new()
    }
}

type PointField = Arc<dyn Fn(&Vec3) -> Result<Vec3> + Send + Sync>;
type BoundaryFn = Arc<dyn Fn(&[f64]) -> Option<String> + Send + Sync>;

/// First-order flow ẋ = v(x) in ℝ³ as a [`Formulation`].
#[derive(Clone)]
pub struct FieldFormulation {
    field: PointField,
    invariants: Vec<Monitor>,
    constraints: Vec<Monitor>,
    boundary: Option<BoundaryFn>,
}

impl FieldFormulation {
    pub fn new(field: impl Fn(&Vec3) -> Result<Vec3> + Send + Sync + 'static) -> Self {
        Self { field: Arc::new(field), invariants: Vec::new(), constraints: Vec::new(), boundary: None }
    }

    pub fn with_invariant(mut self, m: Monitor) -> Self {
        self.invariants.push(m);
        self
    }

    pub fn with_constraint(mut self, m: Monitor) -> Self {
        self.constraints.push(m);
        self
    }

    pub fn with_boundary(mut self, b: impl Fn(&[f64]) -> Option<String> + Send + Sync + 'static) -> Self {
        self.boundary = Some(Arc::new(b));
        self
    }

    pub fn field(&self, x: &Vec3) -> Result<Vec3> {
        (self.field)(x)
    }
}

impl OdeSystem for FieldFormulation {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy.copy_from_slice((self.field)(&v3(y))?.as_slice());
        Ok(())
    }

    fn boundary(&self, y: &[f64]) -> Option<String> {
        self.boundary.as_ref().and_then(|b| b(y))
    }
}

impl Formulation for FieldFormulation {
    fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>> {
        if x0.len() != 3 {
            return Err(Error::InvalidInput(format!("expected 3 coordinates, got {}", x0.len())));
        }
        Ok(x0.to_vec())
    }

    fn position(&self, y: &[f64]) -> Vec<f64> {
        y[..3].to_vec()
    }

    fn invariants(&self) -> Vec<Monitor> {
        self.invariants.clone()
    }

    fn constraints(&self) -> Vec<Monitor> {
        self.constraints.clone()
    }
}

/// Classical constrained system whose initial velocity is taken from a
/// first-order field, so both formulations start from matched data.
#[derive(Clone)]
pub struct ConstrainedFormulation {
    pub system: ConstrainedSystem,
    velocity: PointField,
    invariants: Vec<Monitor>,
    boundary: Option<BoundaryFn>,
}

impl ConstrainedFormulation {
    pub fn new(system: ConstrainedSystem, velocity: impl Fn(&Vec3) -> Result<Vec3> + Send + Sync + 'static) -> Self {
        Self { system, velocity: Arc::new(velocity), invariants: Vec::new(), boundary: None }
    }

    pub fn with_invariant(mut self, m: Monitor) -> Self {
        self.invariants.push(m);
        self
    }

    pub fn with_boundary(mut self, b: impl Fn(&[f64]) -> Option<String> + Send + Sync + 'static) -> Self {
        self.boundary = Some(Arc::new(b));
        self
    }
}

impl OdeSystem for ConstrainedFormulation {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.system.rhs(t, y, dy)
    }

    fn project(&self, y: &mut [f64]) {
        self.system.project(y)
    }

    fn boundary(&self, y: &[f64]) -> Option<String> {
        self.boundary.as_ref().and_then(|b| b(y))
    }
}

impl Formulation for ConstrainedFormulation {
    fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>> {
        if x0.len() != 3 {
            return Err(Error::InvalidInput(format!("expected 3 coordinates, got {}", x0.len())));
        }
        let x = v3(x0);
        let v = (self.velocity)(&x)?;
        let a = self.system.a.try_eval(&x)?;
        let r = a.dot(&v);
        if r.abs() > 1e-9 * (1.0 + a.norm() * v.norm()) {
            return Err(Error::ConstraintViolated(r));
        }
        Ok(vec![x[0], x[1], x[2], v[0], v[1], v[2]])
    }

    fn position(&self, y: &[f64]) -> Vec<f64> {
        y[..3].to_vec()
    }

    fn invariants(&self) -> Vec<Monitor> {
        self.invariants.clone()
    }

    fn constraints(&self) -> Vec<Monitor> {
        let s = self.system.clone();
        vec![Monitor::new("constraint", move |y| s.constraint_residual(y))]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub deviation: f64,
    pub drift: f64,
    pub constraint: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { deviation: 1e-5, drift: 1e-7, constraint: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidationReport {
    pub sup_deviation: f64,
    pub compared_until: f64,
    pub samples: usize,
    pub cartesian_drift: DriftReport,
    pub classical_drift: DriftReport,
    pub constraint_max: f64,
    pub tolerances: Tolerances,
    pub notes: Vec<String>,
    pub pass: bool,
}

/// Integrate both formulations from matched initial data and compare
/// positions at the Cartesian sample times.
pub fn cross_validate(
    cartesian: &dyn Formulation,
    classical: &dyn Formulation,
    x0: &[f64],
    cfg: &IntegratorConfig,
    tol: Tolerances,
) -> Result<CrossValidationReport> {
    let yc = cartesian.initial_state(x0)?;
    let yk = classical.initial_state(x0)?;
    let tc = integrate(cartesian, &yc, cfg)?;
    let tk = integrate(classical, &yk, cfg)?;
    let mut notes = Vec::new();
    for (label, t) in [("cartesian", &tc), ("classical", &tk)] {
        if let Termination::Boundary { t, reason } = &t.termination {
            notes.push(format!("{label} run stopped at t = {t}: {reason}"));
        }
    }
    let until = tc.t_final().min(tk.t_final());
    let mut sup = 0.0f64;
    let mut samples = 0;
    for (t, y) in tc.times.iter().zip(&tc.states) {
        if *t > until {
            break;
        }
        let pc = cartesian.position(y);
        let pk = classical.position(&tk.interpolate(*t)?);
        let d = pc.iter().zip(&pk).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        sup = sup.max(d);
        samples += 1;
    }
    let cartesian_drift = drift_report(&tc, &cartesian.invariants());
    let classical_drift = drift_report(&tk, &classical.invariants());
    let worst = |ms: Vec<Monitor>, tr: &Trajectory| {
        ms.iter()
            .map(|m| tr.states.iter().map(|y| m.eval(y).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    };
    let constraint_max = worst(classical.constraints(), &tk).max(worst(cartesian.constraints(), &tc));
    let drift_ok = cartesian_drift.max_abs() <= tol.drift && classical_drift.max_abs() <= tol.drift;
    let complete = notes.is_empty();
    let pass = sup <= tol.deviation && drift_ok && constraint_max <= tol.constraint && complete;
    Ok(CrossValidationReport {
        sup_deviation: sup,
        compared_until: until,
        samples,
        cartesian_drift,
        classical_drift,
        constraint_max,
        tolerances: tol,
        notes,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::veccalc::vec3;

    #[test]
    fn rotation_period() {
        let cfg = IntegratorConfig::rk4(2.0 * std::f64::consts::PI, 1e-3);
        let tr = integrate_first_order(|x| Ok(vec3(x[1], -x[0], 0.0)), &vec3(1., 0., 0.), &cfg).unwrap();
        let y = tr.last();
        assert!((y[0] - 1.0).abs() < 1e-7 && y[1].abs() < 1e-7);
    }

    #[test]
    fn free_particle_in_plane() {
        let sys = ConstrainedSystem::new(Mat3::identity(), |_, _| Ok(Vec3::zeros()), VectorField::constant(vec3(0., 0., 1.))).unwrap();
        let tr = integrate_constrained_second_order(&sys, &vec3(0., 0., 1.), &vec3(1., 2., 0.), &IntegratorConfig::rk4(3.0, 1e-2)).unwrap();
        let y = tr.last();
        assert!((y[0] - 3.0).abs() < 1e-12 && (y[1] - 6.0).abs() < 1e-12 && (y[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constrained_rejects_bad_initial_velocity() {
        let sys = ConstrainedSystem::new(Mat3::identity(), |_, _| Ok(Vec3::zeros()), VectorField::constant(vec3(0., 0., 1.))).unwrap();
        let r = integrate_constrained_second_order(&sys, &Vec3::zeros(), &vec3(0., 0., 1.), &IntegratorConfig::default());
        assert!(matches!(r, Err(Error::ConstraintViolated(_))));
        let zero = ConstrainedSystem::new(Mat3::identity(), |_, _| Ok(Vec3::zeros()), VectorField::constant(Vec3::zeros())).unwrap();
        assert_eq!(zero.multiplier(&Vec3::zeros(), &Vec3::zeros()), Err(Error::IllPosedConstraint));
    }

    #[test]
    fn drift_detects_perturbation() {
        let mut tr = integrate_first_order(|x| Ok(vec3(x[1], -x[0], 0.0)), &vec3(1., 0., 0.), &IntegratorConfig::rk4(1.0, 1e-3)).unwrap();
        let r2 = Monitor::new("r2", |y| y[0] * y[0] + y[1] * y[1]);
        let one = Monitor::new("one", |_| 1.0);
        let rep = drift_report(&tr, &[r2.clone(), one]);
        assert!(rep.get("r2").unwrap().max_abs < 1e-12);
        assert_eq!(rep.get("one").unwrap().max_abs, 0.0);
        tr.states[500][0] += 1e-3;
        assert!(drift_report(&tr, &[r2]).entries[0].max_abs > 1e-4);
    }
}
