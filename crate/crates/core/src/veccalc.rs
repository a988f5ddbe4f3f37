//! Differential vector calculus in three dimensions.
//!
//! Fields carry an evaluator and, optionally, analytic derivatives. When a
//! derivative is missing it is replaced by a second-order central difference
//! with the field's own step, so the backend is a per-field choice.

use std::fmt;
use std::sync::Arc;

use crate::error::{arr, Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

type ScalarFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&Vec3) -> Mat3 + Send + Sync>;

/// Real function of one variable.
pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Real function of two variables.
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn vec3(a: f64, b: f64, c: f64) -> Vec3 {
    Vec3::new(a, b, c)
}

pub fn cross(u: &Vec3, v: &Vec3) -> Vec3 {
    u.cross(v)
}

/// A map ℝ³ → ℝ.
#[derive(Clone)]
pub struct ScalarField {
    value: ScalarFn,
    gradient: Option<VectorFn>,
    hessian: Option<MatrixFn>,
    step: f64,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .field("step", &self.step)
            .finish()
    }
}

impl ScalarField {
    pub fn new(f: impl Fn(&Vec3) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(f),
            gradient: None,
            hessian: None,
            step: DEFAULT_STEP,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
            .with_gradient(|_| Vec3::zeros())
            .with_hessian(|_| Mat3::zeros())
    }

    pub fn with_gradient(mut self, g: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&Vec3) -> Mat3 + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    /// Drop analytic derivatives so every derivative goes through finite differences.
    pub fn numeric_only(&self) -> Self {
        Self {
            value: self.value.clone(),
            gradient: None,
            hessian: None,
            step: self.step,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        (self.value)(x)
    }

    pub fn try_eval(&self, x: &Vec3) -> Result<f64> {
        let v = (self.value)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("scalar field is not finite at {:?}", arr(x))))
        }
    }

    /// Central-difference gradient, ignoring any analytic gradient.
    pub fn fd_gradient(&self, x: &Vec3) -> Result<Vec3> {
        let h = self.step;
        let mut g = Vec3::zeros();
        for i in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (self.try_eval(&xp)? - self.try_eval(&xm)?) / (2.0 * h);
        }
        Ok(g)
    }

    pub fn as_gradient_field(&self) -> VectorField {
        let f = self.clone();
        let field = VectorField::new(move |x| grad(&f, x).unwrap_or_else(|_| Vec3::repeat(f64::NAN)));
        let field = field.with_step(self.step);
        match self.hessian.clone() {
            Some(h) => field.with_jacobian(move |x| h(x)),
            None => field,
        }
    }
}

/// A map ℝ³ → ℝ³.
#[derive(Clone)]
pub struct VectorField {
    value: VectorFn,
    jacobian: Option<MatrixFn>,
    step: f64,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("step", &self.step)
            .finish()
    }
}

impl VectorField {
    pub fn new(f: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(f),
            jacobian: None,
            step: DEFAULT_STEP,
        }
    }

    pub fn constant(c: Vec3) -> Self {
        Self::new(move |_| c).with_jacobian(|_| Mat3::zeros())
    }

    /// `jac(x)[(i, j)]` is ∂F_i/∂x_j.
    pub fn with_jacobian(mut self, jac: impl Fn(&Vec3) -> Mat3 + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn numeric_only(&self) -> Self {
        Self {
            value: self.value.clone(),
            jacobian: None,
            step: self.step,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        (self.value)(x)
    }

    pub fn try_eval(&self, x: &Vec3) -> Result<Vec3> {
        let v = (self.value)(x);
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(Error::Domain(format!("vector field is not finite at {:?}", arr(x))))
        }
    }

    pub fn fd_jacobian(&self, x: &Vec3) -> Result<Mat3> {
        let h = self.step;
        let mut j = Mat3::zeros();
        for k in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[k] += h;
            xm[k] -= h;
            let col = (self.try_eval(&xp)? - self.try_eval(&xm)?) / (2.0 * h);
            j.set_column(k, &col);
        }
        Ok(j)
    }

    /// Pointwise cross product of two fields (no analytic Jacobian).
    pub fn cross_with(&self, other: &VectorField) -> VectorField {
        let (a, b) = (self.clone(), other.clone());
        VectorField::new(move |x| a.eval(x).cross(&b.eval(x))).with_step(self.step)
    }
}

fn finite_mat(m: Mat3, x: &Vec3) -> Result<Mat3> {
    if m.iter().all(|c| c.is_finite()) {
        Ok(m)
    } else {
        Err(Error::Domain(format!("derivative is not finite at {:?}", arr(x))))
    }
}

pub fn grad(f: &ScalarField, x: &Vec3) -> Result<Vec3> {
    match &f.gradient {
        Some(g) => {
            let v = g(x);
            if v.iter().all(|c| c.is_finite()) {
                Ok(v)
            } else {
                Err(Error::Domain(format!("gradient is not finite at {:?}", arr(x))))
            }
        }
        None => f.fd_gradient(x),
    }
}

pub fn jacobian(field: &VectorField, x: &Vec3) -> Result<Mat3> {
    match &field.jacobian {
        Some(j) => finite_mat(j(x), x),
        None => field.fd_jacobian(x),
    }
}

pub fn div(field: &VectorField, x: &Vec3) -> Result<f64> {
    Ok(jacobian(field, x)?.trace())
}

fn curl_of_jacobian(j: &Mat3) -> Vec3 {
    Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}

pub fn curl(field: &VectorField, x: &Vec3) -> Result<Vec3> {
    Ok(curl_of_jacobian(&jacobian(field, x)?))
}

/// Symmetric Hessian. With an analytic gradient the gradient is differenced;
/// from values alone a 9-point stencil is used with a step ten times the
/// field step, which keeps cancellation error near 1e-8 for O(1) fields.
pub fn hessian(f: &ScalarField, x: &Vec3) -> Result<Mat3> {
    if let Some(h) = &f.hessian {
        return finite_mat(h(x), x);
    }
    let m = if let Some(g) = &f.gradient {
        let h = f.step;
        let mut m = Mat3::zeros();
        for k in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[k] += h;
            xm[k] -= h;
            m.set_column(k, &((g(&xp) - g(&xm)) / (2.0 * h)));
        }
        m
    } else {
        let h = 10.0 * f.step;
        let f0 = f.try_eval(x)?;
        let mut m = Mat3::zeros();
        for i in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            m[(i, i)] = (f.try_eval(&xp)? - 2.0 * f0 + f.try_eval(&xm)?) / (h * h);
            for j in (i + 1)..3 {
                let at = |si: f64, sj: f64| {
                    let mut y = *x;
                    y[i] += si * h;
                    y[j] += sj * h;
                    f.try_eval(&y)
                };
                let v = (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?) / (4.0 * h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    };
    let m = finite_mat(m, x)?;
    Ok(0.5 * (m + m.transpose()))
}

/// Flow-commutator bracket `[a, b] = (Db)·a − (Da)·b`.
pub fn lie_bracket(a: &VectorField, b: &VectorField, x: &Vec3) -> Result<Vec3> {
    let av = a.try_eval(x)?;
    let bv = b.try_eval(x)?;
    Ok(jacobian(b, x)? * av - jacobian(a, x)? * bv)
}

/// Determinant of the matrix whose rows are ∇F, ∇G, ∇H.
pub fn triple_det(f: &ScalarField, g: &ScalarField, h: &ScalarField, x: &Vec3) -> Result<f64> {
    let m = Mat3::from_rows(&[
        grad(f, x)?.transpose(),
        grad(g, x)?.transpose(),
        grad(h, x)?.transpose(),
    ]);
    Ok(m.determinant())
}

/// Curl of a covector field: (∂₂p₃−∂₃p₂, ∂₃p₁−∂₁p₃, ∂₁p₂−∂₂p₁).
pub fn covector_curl(p: &VectorField, x: &Vec3) -> Result<Vec3> {
    curl(p, x)
}

/// Curl on a chart with metric `G`: indices are lowered with `G` and the
/// coordinate curl of the covector is divided by √det G.
pub fn metric_curl<G>(metric: G, v: &VectorField, x: &Vec3) -> Result<Vec3>
where
    G: Fn(&Vec3) -> Mat3 + Send + Sync + Clone + 'static,
{
    let g = metric(x);
    let det = g.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::DegenerateMetric(det));
    }
    let vf = v.clone();
    let p = VectorField::new(move |y| metric(y) * vf.eval(y)).with_step(v.step());
    Ok(covector_curl(&p, x)? / det.sqrt())
}

/// curl(a×b) minus the classical expansion (Da)b − (Db)a + (div b)a − (div a)b.
pub fn curl_cross_identity_residual(a: &VectorField, b: &VectorField, x: &Vec3) -> Result<Vec3> {
    let ab = a.cross_with(b);
    let lhs = curl(&ab, x)?;
    let (av, bv) = (a.try_eval(x)?, b.try_eval(x)?);
    let (ja, jb) = (jacobian(a, x)?, jacobian(b, x)?);
    let rhs = ja * bv - jb * av + jb.trace() * av - ja.trace() * bv;
    Ok(lhs - rhs)
}

/// Adjugate (transpose of the cofactor matrix).
pub fn adjugate(m: &Mat3) -> Mat3 {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    Mat3::new(
        c(1, 2, 1, 2),
        -c(0, 2, 1, 2),
        c(0, 1, 1, 2),
        -c(1, 2, 0, 2),
        c(0, 2, 0, 2),
        -c(0, 1, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 0, 1),
        c(0, 1, 0, 1),
    )
}

/// Max-abs difference between analytic and central-difference derivatives,
/// scaled so that a value ≤ 1 means agreement within `tol·(1+|analytic|)`.
pub fn derivative_agreement(f: &ScalarField, x: &Vec3, tol: f64) -> Result<f64> {
    let Some(g) = &f.gradient else { return Ok(0.0) };
    let a = g(x);
    let n = f.fd_gradient(x)?;
    Ok((a - n).norm() / (tol * (1.0 + a.norm())))
}

pub fn field_agreement(v: &VectorField, x: &Vec3, tol: f64) -> Result<f64> {
    let Some(j) = &v.jacobian else { return Ok(0.0) };
    let a = j(x);
    let n = v.fd_jacobian(x)?;
    Ok((a - n).norm() / (tol * (1.0 + a.norm())))
}
