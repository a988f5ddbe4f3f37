use std::sync::Arc;

use crate::error::{Error, Result};

/// An autonomous-or-not first-order system y' = F(t, y).
pub trait OdeSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Post-step stabilization hook; called only when projection is enabled.
    fn project(&self, _y: &mut [f64]) {}

    /// Returns a reason when the state has left the region where the system is valid.
    fn boundary(&self, _y: &[f64]) -> Option<String> {
        None
    }
}

/// Wraps a closure as an [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> OdeSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (self.f)(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4 { step: f64 },
    Rk45 { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t0: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// Resample on a uniform grid by Hermite interpolation; `None` keeps every step.
    pub sample_every: Option<f64>,
    /// Apply the system's projection hook after each accepted step.
    pub project: bool,
}

impl IntegratorConfig {
    pub fn rk4(t_end: f64, step: f64) -> Self {
        Self {
            method: Method::Rk4 { step },
            t0: 0.0,
            t_end,
            max_steps: 50_000_000,
            sample_every: None,
            project: false,
        }
    }

    pub fn rk45(t_end: f64, rtol: f64, atol: f64) -> Self {
        Self {
            method: Method::Rk45 { rtol, atol },
            ..Self::rk4(t_end, 1e-3)
        }
    }

    pub fn sampled(mut self, dt: f64) -> Self {
        self.sample_every = Some(dt);
        self
    }

    pub fn with_projection(mut self, on: bool) -> Self {
        self.project = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.method {
            Method::Rk4 { step } => step > 0.0 && step.is_finite(),
            Method::Rk45 { rtol, atol } => rtol > 0.0 && atol > 0.0,
        };
        if !ok || !(self.t_end > self.t0) || self.max_steps == 0 {
            return Err(Error::InvalidInput("integrator configuration needs positive step/tolerances and t_end > t0".into()));
        }
        if let Some(dt) = self.sample_every {
            if !(dt > 0.0) {
                return Err(Error::InvalidInput("sample interval must be positive".into()));
            }
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::rk4(10.0, 1e-3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Boundary { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Constraint,
    Invariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub name: String,
    pub kind: DiagnosticKind,
    pub values: Vec<f64>,
}

/// A named state function used for constraint residuals and first integrals.
#[derive(Clone)]
pub struct Monitor {
    pub name: String,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Monitor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Monitor({})", self.name)
    }
}

impl Monitor {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        (self.f)(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    pub diagnostics: Vec<Diagnostic>,
    pub termination: Termination,
    pub steps: usize,
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap_or(&f64::NAN)
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Cubic Hermite interpolation between stored samples.
    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>> {
        let n = self.times.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty trajectory".into()));
        }
        let (lo, hi) = (self.times[0], self.times[n - 1]);
        let slack = 1e-12 * (1.0 + hi.abs());
        if t < lo - slack || t > hi + slack {
            return Err(Error::InvalidInput(format!("t = {t} outside [{lo}, {hi}]")));
        }
        if n == 1 {
            return Ok(self.states[0].clone());
        }
        let k = match self.times.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(i) => return Ok(self.states[i].clone()),
            Err(i) => i.clamp(1, n - 1),
        };
        Ok(hermite(
            self.times[k - 1],
            &self.states[k - 1],
            &self.derivatives[k - 1],
            self.times[k],
            &self.states[k],
            &self.derivatives[k],
            t,
        ))
    }

    /// Evaluate `m` at every sample and store it as a diagnostic column.
    pub fn attach(&mut self, m: &Monitor, kind: DiagnosticKind) {
        let values = self.states.iter().map(|y| m.eval(y)).collect();
        self.diagnostics.push(Diagnostic { name: m.name.clone(), kind, values });
    }

    pub fn diagnostic(&self, name: &str) -> Option<&Diagnostic> {
        self.diagnostics.iter().find(|d| d.name == name)
    }
}

struct Recorder<'a> {
    grid: Option<(f64, f64, usize)>,
    next: usize,
    t_end: f64,
    out: &'a mut Trajectory,
}

impl Recorder<'_> {
    fn grid_time(&self, k: usize) -> f64 {
        let (t0, dt, n) = self.grid.expect("grid");
        if k + 1 == n {
            self.t_end
        } else {
            t0 + k as f64 * dt
        }
    }

    fn start(&mut self, t: f64, y: &[f64], f: &[f64]) {
        self.out.times.push(t);
        self.out.states.push(y.to_vec());
        self.out.derivatives.push(f.to_vec());
        if self.grid.is_some() {
            self.next = 1;
        }
    }

    /// Record an accepted step [t0, t1]. Grid samples are Hermite-interpolated.
    fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64]) -> Result<()> {
        match self.grid {
            None => {
                self.out.times.push(t1);
                self.out.states.push(y1.to_vec());
                self.out.derivatives.push(f1.to_vec());
            }
            Some((_, _, n)) => {
                while self.next < n {
                    let tg = self.grid_time(self.next);
                    if tg > t1 + 1e-12 * (1.0 + t1.abs()) {
                        break;
                    }
                    let (y, f) = if (tg - t1).abs() <= 1e-12 * (1.0 + t1.abs()) {
                        (y1.to_vec(), f1.to_vec())
                    } else {
                        let y = hermite(t0, y0, f0, t1, y1, f1, tg);
                        let mut f = vec![0.0; y.len()];
                        sys.rhs(tg, &y, &mut f)?;
                        (y, f)
                    };
                    self.out.times.push(tg);
                    self.out.states.push(y);
                    self.out.derivatives.push(f);
                    self.next += 1;
                }
            }
        }
        Ok(())
    }
}

fn check_finite(t: f64, y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState(t))
    }
}

/// Integrate `sys` from `y0` according to `cfg`.
pub fn integrate<S: OdeSystem + ?Sized>(sys: &S, y0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::InvalidInput(format!("initial state has {} entries, system dimension is {n}", y0.len())));
    }
    check_finite(cfg.t0, y0)?;
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        derivatives: Vec::new(),
        diagnostics: Vec::new(),
        termination: Termination::Completed,
        steps: 0,
    };
    let grid = cfg.sample_every.map(|dt| {
        let span = cfg.t_end - cfg.t0;
        let k = (span / dt * (1.0 + 1e-12)).floor() as usize;
        let last_on_grid = (cfg.t0 + k as f64 * dt - cfg.t_end).abs() <= 1e-12 * (1.0 + cfg.t_end.abs());
        (cfg.t0, dt, if last_on_grid { k + 1 } else { k + 2 })
    });
    let mut rec = Recorder { grid, next: 0, t_end: cfg.t_end, out: &mut traj };

    let mut y = y0.to_vec();
    if let Some(reason) = sys.boundary(&y) {
        return Err(Error::ChartDegeneracy(format!("initial state outside the valid region: {reason}")));
    }
    let mut f = vec![0.0; n];
    sys.rhs(cfg.t0, &y, &mut f)?;
    check_finite(cfg.t0, &f)?;
    rec.start(cfg.t0, &y, &f);

    let mut stepper = match cfg.method {
        Method::Rk4 { step } => Stepper::Rk4(Rk4::new(n, step, cfg.t0, cfg.t_end)),
        Method::Rk45 { rtol, atol } => Stepper::Dopri(Dopri::new(rtol, atol, cfg.t_end - cfg.t0)),
    };
    let mut t = cfg.t0;
    let mut steps = 0usize;
    let mut termination = Termination::Completed;
    while t < cfg.t_end - 1e-14 * (1.0 + cfg.t_end.abs()) {
        if steps >= cfg.max_steps {
            return Err(Error::StepUnderflow(t));
        }
        // Adaptive steps land exactly on grid times so samples need no interpolation.
        let limit = match (&stepper, rec.grid) {
            (Stepper::Dopri(_), Some((_, _, n))) if rec.next < n => rec.grid_time(rec.next).min(cfg.t_end),
            _ => cfg.t_end,
        };
        let (t1, mut y1) = stepper.step(sys, t, &y, &f, limit)?;
        check_finite(t1, &y1)?;
        if cfg.project {
            sys.project(&mut y1);
        }
        let mut f1 = vec![0.0; n];
        sys.rhs(t1, &y1, &mut f1)?;
        check_finite(t1, &f1)?;
        rec.step(sys, t, &y, &f, t1, &y1, &f1)?;
        steps += 1;
        t = t1;
        y = y1;
        f = f1;
        if let Some(reason) = sys.boundary(&y) {
            if rec.grid.is_some() && rec.out.times.last() != Some(&t) {
                rec.out.times.push(t);
                rec.out.states.push(y.clone());
                rec.out.derivatives.push(f.clone());
            }
            termination = Termination::Boundary { t, reason };
            break;
        }
    }
    traj.termination = termination;
    traj.steps = steps;
    Ok(traj)
}

enum Stepper {
    Rk4(Rk4),
    Dopri(Dopri),
}

impl Stepper {
    fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, y: &[f64], f: &[f64], t_end: f64) -> Result<(f64, Vec<f64>)> {
        match self {
            Stepper::Rk4(s) => s.step(sys, t, y, f, t_end),
            Stepper::Dopri(s) => s.step(sys, t, y, f, t_end),
        }
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        for i in 0..out.len() {
            out[i] += h * c * k[i];
        }
    }
    out
}

struct Rk4 {
    step: f64,
    t0: f64,
    k: usize,
    total: usize,
    buf: [Vec<f64>; 3],
}

impl Rk4 {
    fn new(n: usize, step: f64, t0: f64, t_end: f64) -> Self {
        let total = ((t_end - t0) / step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self { step, t0, k: 0, total, buf: [vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
    }
}

impl Rk4 {
    fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, y: &[f64], f: &[f64], t_end: f64) -> Result<(f64, Vec<f64>)> {
        // Times are t0 + k·h (no accumulation); the final step lands on t_end.
        self.k += 1;
        let t1 = if self.k >= self.total { t_end } else { self.t0 + self.k as f64 * self.step };
        let h = t1 - t;
        let [k2, k3, k4] = &mut self.buf;
        sys.rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &[(1.0, f)]), k2)?;
        sys.rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &[(1.0, k2)]), k3)?;
        sys.rhs(t1, &axpy(y, h, &[(1.0, k3)]), k4)?;
        let y1 = axpy(y, h / 6.0, &[(1.0, f), (2.0, k2), (2.0, k3), (1.0, k4)]);
        Ok((t1, y1))
    }
}

/// Dormand–Prince 5(4) with standard step-size control.
struct Dopri {
    rtol: f64,
    atol: f64,
    h: f64,
    h_min: f64,
}

impl Dopri {
    fn new(rtol: f64, atol: f64, span: f64) -> Self {
        Self { rtol, atol, h: (span * 1e-3).min(1e-2), h_min: span * 1e-14 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dopri {
    fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, y: &[f64], f: &[f64], t_end: f64) -> Result<(f64, Vec<f64>)> {
        let n = y.len();
        loop {
            let truncated = self.h > t_end - t;
            let h = self.h.min(t_end - t);
            if h < self.h_min {
                return Err(Error::StepUnderflow(t));
            }
            let mut k: Vec<Vec<f64>> = vec![f.to_vec()];
            let mut ok = true;
            for s in 1..7 {
                let terms: Vec<(f64, &[f64])> = (0..s).map(|j| (A[s][j], k[j].as_slice())).collect();
                let ys = axpy(y, h, &terms);
                let mut ks = vec![0.0; n];
                if sys.rhs(t + C[s] * h, &ys, &mut ks).is_err() || ks.iter().any(|v| !v.is_finite()) {
                    ok = false;
                    break;
                }
                k.push(ks);
            }
            if !ok {
                self.h = 0.25 * h;
                continue;
            }
            let y5 = axpy(y, h, &(0..7).map(|j| (B5[j], k[j].as_slice())).collect::<Vec<_>>());
            let mut err = 0.0f64;
            for i in 0..n {
                let e: f64 = (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>() * h;
                let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                let t1 = if (t_end - (t + h)).abs() < 1e-14 * (1.0 + t_end.abs()) { t_end } else { t + h };
                self.h = if truncated { self.h.max(h * fac) } else { h * fac };
                return Ok((t1, y5));
            }
            self.h = h * fac.min(1.0);
        }
    }
}
