//! Cartesian vector fields for a particle with one velocity constraint
//! (a(x), ẋ) = 0: a field v is Cartesian when [v × curl v] ∥ a, which makes
//! both (a, v) and (a, curl v) vanish and turns the flow of v into
//! constrained motion with force function ½‖v‖².

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{arr, Error, Result};
use crate::veccalc::{curl, div, grad, jacobian, metric_curl, Mat3, ScalarField, Vec3, VectorField};

/// Constraint covector field a(x).
#[derive(Debug, Clone)]
pub struct Constraint {
    pub a: VectorField,
}

impl Constraint {
    pub fn new(a: VectorField) -> Self {
        Self { a }
    }

    pub fn from_gradient(f: &ScalarField) -> Self {
        Self { a: f.as_gradient_field() }
    }

    /// a(x), rejecting points where it vanishes.
    pub fn at(&self, x: &Vec3) -> Result<Vec3> {
        let a = self.a.try_eval(x)?;
        if a.norm() <= 1e-14 {
            return Err(Error::DegenerateConstraint(arr(x)));
        }
        Ok(a)
    }
}

/// A candidate field v, optionally generated as v = a × w.
#[derive(Debug, Clone)]
pub struct FieldCandidate {
    pub v: VectorField,
    pub w: Option<VectorField>,
}

impl FieldCandidate {
    pub fn new(v: VectorField) -> Self {
        Self { v, w: None }
    }

    pub fn from_generator(a: &Constraint, w: VectorField) -> Self {
        let (af, wf) = (a.a.clone(), w.clone());
        let v = VectorField::new(move |x| af.eval(x).cross(&wf.eval(x)));
        Self { v, w: Some(w) }
    }

    /// max ‖v − a×w‖ over the given points (0 when no generator is attached).
    pub fn generator_mismatch(&self, a: &Constraint, points: &[Vec3]) -> Result<f64> {
        let Some(w) = &self.w else { return Ok(0.0) };
        let mut m = 0.0f64;
        for x in points {
            m = m.max((self.v.try_eval(x)? - a.a.try_eval(x)?.cross(&w.try_eval(x)?)).norm());
        }
        Ok(m)
    }
}

fn v_cross_curl(v: &VectorField, x: &Vec3) -> Result<Vec3> {
    Ok(v.try_eval(x)?.cross(&curl(v, x)?))
}

/// Λ = ([v × curl v], a) / ‖a‖².
pub fn lambda_coefficient(v: &FieldCandidate, a: &Constraint, x: &Vec3) -> Result<f64> {
    let av = a.at(x)?;
    Ok(v_cross_curl(&v.v, x)?.dot(&av) / av.norm_squared())
}

/// [v × curl v] − Λ a; zero exactly where v is Cartesian.
pub fn cartesian_residual(v: &FieldCandidate, a: &Constraint, x: &Vec3) -> Result<Vec3> {
    let av = a.at(x)?;
    let w = v_cross_curl(&v.v, x)?;
    Ok(w - (w.dot(&av) / av.norm_squared()) * av)
}

/// ((a, v), (a, curl v)).
pub fn tangency_checks(v: &FieldCandidate, a: &Constraint, x: &Vec3) -> Result<(f64, f64)> {
    let av = a.a.try_eval(x)?;
    Ok((av.dot(&v.v.try_eval(x)?), av.dot(&curl(&v.v, x)?)))
}

pub fn ansatz_field(a: &Constraint, w: &VectorField, x: &Vec3) -> Result<Vec3> {
    Ok(a.a.try_eval(x)?.cross(&w.try_eval(x)?))
}

/// div(a × (a × w)) + (a × curl a, w), which equals −(a, curl(a × w)).
///
/// The field a × w satisfies the curl condition exactly where this vanishes.
pub fn ansatz_condition_residual(a: &Constraint, w: &VectorField, x: &Vec3) -> Result<f64> {
    let (af, wf) = (a.a.clone(), w.clone());
    let aaw = VectorField::new(move |y| {
        let av = af.eval(y);
        av.cross(&av.cross(&wf.eval(y)))
    })
    .with_step(a.a.step());
    Ok(div(&aaw, x)? + gradient_obstruction(a, x)?.dot(&w.try_eval(x)?))
}

/// a × curl a; vanishes identically when a is (a multiple of) a gradient.
pub fn gradient_obstruction(a: &Constraint, x: &Vec3) -> Result<Vec3> {
    Ok(a.a.try_eval(x)?.cross(&curl(&a.a, x)?))
}

/// Acceleration of the flow of v, computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowAcceleration {
    /// (Dv)·v
    pub direct: Vec3,
    /// ∇(½‖v‖²) − v × curl v
    pub split: Vec3,
}

impl FlowAcceleration {
    pub fn discrepancy(&self) -> f64 {
        (self.direct - self.split).norm()
    }
}

pub fn acceleration_of_flow(v: &FieldCandidate, x: &Vec3) -> Result<FlowAcceleration> {
    let vf = v.v.clone();
    let vx = vf.try_eval(x)?;
    let direct = jacobian(&vf, x)? * vx;
    let half_speed = ScalarField::new(move |y| 0.5 * vf.eval(y).norm_squared()).with_step(v.v.step());
    let split = grad(&half_speed, x)? - v_cross_curl(&v.v, x)?;
    let out = FlowAcceleration { direct, split };
    if out.discrepancy() > 1e-5 * (1.0 + direct.norm()) {
        return Err(Error::IdentityMismatch(format!(
            "(Dv)v and grad(|v|^2/2) - v x curl v differ by {:e} at {:?}",
            out.discrepancy(),
            arr(x)
        )));
    }
    Ok(out)
}

/// (Dv)·v − ∇U: zero when the flow of v solves ẍ = ∇U with no constraint.
pub fn steady_lamb_residual(v: &FieldCandidate, u: &ScalarField, x: &Vec3) -> Result<Vec3> {
    Ok(acceleration_of_flow(v, x)?.direct - grad(u, x)?)
}

pub type MetricFn = Arc<dyn Fn(&Vec3) -> Mat3 + Send + Sync>;

/// Per-point certificate values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCertificate {
    pub x: [f64; 3],
    pub lambda: f64,
    pub residual: f64,
    pub tangency: f64,
    pub curl_orthogonality: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CartesianCertificate {
    pub points: Vec<PointCertificate>,
    /// Points where a(x) = 0; reported, excluded from the maxima.
    pub degenerate: Vec<[f64; 3]>,
    /// Points where evaluation failed, with the error message.
    pub failures: Vec<([f64; 3], String)>,
    pub max_residual: f64,
    pub max_tangency: f64,
    pub max_curl_orthogonality: f64,
}

impl CartesianCertificate {
    pub fn passes(&self, tol: f64) -> bool {
        !self.points.is_empty()
            && self.failures.is_empty()
            && self.max_residual <= tol
            && self.max_tangency <= tol
            && self.max_curl_orthogonality <= tol
    }
}

/// Evaluate the Cartesian condition at one point on a chart with metric `g`
/// (identity when `None`). With a metric the momentum p = G v replaces v:
/// the contraction −i_v dp plays the role of [v × curl v].
pub fn certify_point(v: &VectorField, a: &Constraint, metric: Option<&MetricFn>, x: &Vec3) -> Result<PointCertificate> {
    let av = a.at(x)?;
    let vx = v.try_eval(x)?;
    let (w, rot, ginv) = match metric {
        None => (vx.cross(&curl(v, x)?), curl(v, x)?, Mat3::identity()),
        Some(g) => {
            let (gc, vc) = (g.clone(), v.clone());
            let p = VectorField::new(move |y| gc(y) * vc.eval(y)).with_step(v.step());
            let jp = jacobian(&p, x)?;
            let w = -(jp * vx) + jp.transpose() * vx;
            let gg = g.clone();
            let rot = metric_curl(move |y: &Vec3| gg(y), v, x)?;
            let ginv = g(x).try_inverse().ok_or(Error::DegenerateMetric(0.0))?;
            (w, rot, ginv)
        }
    };
    let lambda = w.dot(&(ginv * av)) / av.dot(&(ginv * av));
    Ok(PointCertificate {
        x: arr(x),
        lambda,
        residual: (w - lambda * av).norm(),
        tangency: av.dot(&vx).abs(),
        curl_orthogonality: av.dot(&rot).abs(),
    })
}

/// Evaluate the certificate over a point cloud (in parallel) and max-reduce.
pub fn certify(v: &VectorField, a: &Constraint, metric: Option<&MetricFn>, points: &[Vec3]) -> CartesianCertificate {
    let results: Vec<(Vec3, Result<PointCertificate>)> =
        points.par_iter().map(|x| (*x, certify_point(v, a, metric, x))).collect();
    let mut cert = CartesianCertificate::default();
    for (x, r) in results {
        match r {
            Ok(p) => {
                cert.max_residual = cert.max_residual.max(p.residual);
                cert.max_tangency = cert.max_tangency.max(p.tangency);
                cert.max_curl_orthogonality = cert.max_curl_orthogonality.max(p.curl_orthogonality);
                cert.points.push(p);
            }
            Err(Error::DegenerateConstraint(at)) => cert.degenerate.push(at),
            Err(e) => cert.failures.push((arr(&x), e.to_string())),
        }
    }
    cert
}
