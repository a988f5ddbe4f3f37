//! Scenario execution: integrate, check, compare, and write artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use descartes_core::cartesian::certify;
use descartes_core::engine::{self, cross_validate, drift_report, integrate, IntegratorConfig, Method, Termination, Trajectory};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::catalog::{self, Check, System, SystemInfo};
use crate::config::{parse_config, MethodSpec, OutputKind, ScenarioConfig, Tolerances};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A parsed config together with its id (directory name for artifacts).
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub config: ScenarioConfig,
}

impl Scenario {
    pub fn from_text(default_id: &str, text: &str) -> Result<Self, CliError> {
        let config = parse_config(text).map_err(|e| CliError::Config(format!("{default_id}: {e}")))?;
        let id = config.name.clone().unwrap_or_else(|| default_id.to_string());
        Ok(Self { id, config })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Self::from_text(stem, &text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {}", path.display(), m.trim_start_matches(&format!("{stem}: ")))),
            other => other,
        })
    }

    fn info(&self) -> &'static SystemInfo {
        catalog::lookup(&self.config.system).expect("validated by the parser")
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let c = &self.config;
        let mut cfg = match c.method {
            MethodSpec::Rk4 { step } => IntegratorConfig::rk4(c.t_end, step),
            MethodSpec::Rk45 { rtol, atol } => IntegratorConfig::rk45(c.t_end, rtol, atol),
        };
        cfg.sample_every = c.sample;
        cfg.with_projection(c.projection)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Error => "error",
        }
    }

    fn of(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputReport {
    pub kind: &'static str,
    pub status: Status,
    pub message: String,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub system: String,
    pub wall_time: f64,
    pub outputs: Vec<OutputReport>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        exit_code(std::slice::from_ref(self))
    }

    fn to_json(&self) -> Value {
        json!({
            "scenario": self.scenario,
            "system": self.system,
            "wall_time_s": self.wall_time,
            "outputs": self.outputs.iter().map(|o| json!({
                "kind": o.kind,
                "status": o.status.as_str(),
                "message": o.message,
                "files": o.files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// 3 if anything errored, else 1 if anything failed, else 0.
pub fn exit_code(reports: &[RunReport]) -> i32 {
    let all = reports.iter().flat_map(|r| &r.outputs);
    if all.clone().any(|o| o.status == Status::Error) {
        3
    } else if all.clone().any(|o| o.status == Status::Fail) {
        1
    } else {
        0
    }
}

/// Shortest decimal that parses back to the same f64.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| fmt_num(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), String> {
    let p = dir.join(name);
    fs::write(&p, contents).map_err(|e| format!("writing {}: {e}", p.display()))?;
    files.push(p);
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn tolerances_json(t: &Tolerances) -> Value {
    json!({ "deviation": t.deviation, "drift": t.drift, "constraint": t.constraint, "certificate": t.certificate })
}

fn method_json(cfg: &IntegratorConfig) -> Value {
    match cfg.method {
        Method::Rk4 { step } => json!({ "method": "rk4", "step": step, "sample": cfg.sample_every, "projection": cfg.project }),
        Method::Rk45 { rtol, atol } => {
            json!({ "method": "rk45", "rtol": rtol, "atol": atol, "sample": cfg.sample_every, "projection": cfg.project })
        }
    }
}

fn termination_note(tr: &Trajectory) -> Option<String> {
    match &tr.termination {
        Termination::Completed => None,
        Termination::Boundary { t, reason } => Some(format!("stopped at t = {t}: {reason}")),
    }
}

/// Outcome of a Cartesian-condition check over a sample cloud.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub check: String,
    pub requested: usize,
    pub checked: usize,
    pub failures: Vec<String>,
    /// (name, max) pairs; all must be within tolerance.
    pub maxima: Vec<(&'static str, f64)>,
    /// One row per checked point: x1, x2, x3, then the per-point values.
    pub rows: Vec<Vec<f64>>,
    pub columns: Vec<&'static str>,
    pub pass: bool,
}

impl CheckOutcome {
    pub fn max(&self, name: &str) -> Option<f64> {
        self.maxima.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    pub fn to_json(&self, tol: f64) -> Value {
        json!({
            "check": self.check,
            "requested_points": self.requested,
            "checked_points": self.checked,
            "failures": self.failures,
            "maxima": self.maxima.iter().map(|(n, v)| (n.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "tolerance": tol,
            "pass": self.pass,
        })
    }
}

pub fn run_check(check: &Check, points: usize, seed: u64, tol: f64) -> CheckOutcome {
    match check {
        Check::Certificate { field, constraint, metric, sampler } => {
            let cloud = sampler(points, seed);
            let cert = certify(field, constraint, metric.as_ref(), &cloud);
            let mut failures: Vec<String> =
                cert.failures.iter().map(|(x, m)| format!("{x:?}: {m}")).collect();
            failures.extend(cert.degenerate.iter().map(|x| format!("{x:?}: constraint vanishes")));
            let pass = cert.passes(tol) && cert.points.len() == points;
            CheckOutcome {
                check: "cartesian certificate".into(),
                requested: points,
                checked: cert.points.len(),
                failures,
                maxima: vec![
                    ("residual", cert.max_residual),
                    ("tangency", cert.max_tangency),
                    ("curl_orthogonality", cert.max_curl_orthogonality),
                ],
                rows: cert
                    .points
                    .iter()
                    .map(|p| vec![p.x[0], p.x[1], p.x[2], p.lambda, p.residual, p.tangency, p.curl_orthogonality])
                    .collect(),
                columns: vec!["x1", "x2", "x3", "lambda", "residual", "tangency", "curl_orthogonality"],
                pass,
            }
        }
        Check::Residual { name, residual, sampler } => {
            let cloud = sampler(points, seed);
            let results: Vec<_> = cloud.par_iter().map(|x| (*x, residual(x))).collect();
            let (mut rows, mut failures, mut worst) = (Vec::new(), Vec::new(), 0.0f64);
            for (x, r) in results {
                match r {
                    Ok(v) if v.is_finite() => {
                        worst = worst.max(v);
                        rows.push(vec![x[0], x[1], x[2], v]);
                    }
                    Ok(v) => failures.push(format!("{:?}: residual {v}", [x[0], x[1], x[2]])),
                    Err(e) => failures.push(format!("{:?}: {e}", [x[0], x[1], x[2]])),
                }
            }
            let pass = failures.is_empty() && rows.len() == points && worst <= tol;
            CheckOutcome {
                check: name.to_string(),
                requested: points,
                checked: rows.len(),
                failures,
                maxima: vec![("residual", worst)],
                rows,
                columns: vec!["p1", "p2", "p3", "residual"],
                pass,
            }
        }
    }
}

/// Cartesian-condition check of a catalog system at its example parameters.
pub fn verify(system: &str, points: usize, seed: u64, tol: f64) -> Result<CheckOutcome, CliError> {
    let info = catalog::lookup(system).ok_or_else(|| {
        let hint = catalog::suggest(system).map(|s| format!("; did you mean `{s}`?")).unwrap_or_default();
        CliError::Config(format!("unknown system `{system}`{hint}"))
    })?;
    let sys = info.build(&info.example_params()).map_err(CliError::Runtime)?;
    Ok(run_check(&sys.check, points, seed, tol))
}

/// Cross-validation alone, as used by the `cross-validate` subcommand.
pub fn cross_validation(scn: &Scenario) -> Result<engine::CrossValidationReport, CliError> {
    let info = scn.info();
    let sys = info.build(&info.resolve(&scn.config.params)).map_err(CliError::Runtime)?;
    let cl = sys
        .classical
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("`{}` has no classical counterpart", info.name)))?;
    let initial = scn.config.initial.as_deref().ok_or_else(|| CliError::Config("`initial` is required".into()))?;
    let x0 = (sys.prepare)(initial).map_err(|e| CliError::Runtime(e.to_string()))?;
    let t = &scn.config.tolerances;
    let tol = engine::Tolerances { deviation: t.deviation, drift: t.drift, constraint: t.constraint };
    cross_validate(sys.cartesian.as_ref(), cl, &x0, &scn.integrator(), tol).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn cross_validation_json(r: &engine::CrossValidationReport) -> Value {
    let drift = |d: &engine::DriftReport| {
        d.entries
            .iter()
            .map(|e| json!({ "name": e.name, "initial": e.initial, "max_abs": e.max_abs, "max_rel": e.max_rel }))
            .collect::<Vec<_>>()
    };
    json!({
        "sup_deviation": r.sup_deviation,
        "compared_until": r.compared_until,
        "samples": r.samples,
        "cartesian_drift": drift(&r.cartesian_drift),
        "classical_drift": drift(&r.classical_drift),
        "constraint_max": r.constraint_max,
        "tolerances": { "deviation": r.tolerances.deviation, "drift": r.tolerances.drift, "constraint": r.tolerances.constraint },
        "notes": r.notes,
        "pass": r.pass,
    })
}

struct Ctx<'a> {
    scn: &'a Scenario,
    sys: &'a System,
    dir: PathBuf,
    meta: Value,
    plot: bool,
}

/// Run one scenario, writing artifacts under `out_root/<id>/`.
pub fn run(scn: &Scenario, out_root: &Path, plot: bool) -> RunReport {
    let start = Instant::now();
    let info = scn.info();
    let mut report = RunReport { scenario: scn.id.clone(), system: info.name.into(), wall_time: 0.0, outputs: Vec::new() };
    let fail_all = |report: &mut RunReport, msg: String| {
        for k in &scn.config.outputs {
            report.outputs.push(OutputReport { kind: k.name(), status: Status::Error, message: msg.clone(), files: vec![] });
        }
    };
    let dir = out_root.join(&scn.id);
    if let Err(e) = fs::create_dir_all(&dir) {
        fail_all(&mut report, format!("{}: {e}", dir.display()));
        return report;
    }
    let params = info.resolve(&scn.config.params);
    let sys = match info.build(&params) {
        Ok(s) => s,
        Err(e) => {
            fail_all(&mut report, format!("building `{}`: {e}", info.name));
            return report;
        }
    };
    let cfg = scn.integrator();
    let meta = json!({
        "scenario": scn.id,
        "system": info.name,
        "params": params.0,
        "integrator": method_json(&cfg),
        "t_end": scn.config.t_end,
        "seed": scn.config.seed,
        "tolerances": tolerances_json(&scn.config.tolerances),
        "version": VERSION,
    });
    let ctx = Ctx { scn, sys: &sys, dir, meta, plot };

    let needs_traj = scn.config.outputs.iter().any(|k| matches!(k, OutputKind::Trajectory | OutputKind::Invariants | OutputKind::Oracle));
    let traj = if needs_traj {
        Some(trajectory(&ctx, &cfg))
    } else {
        None
    };
    for kind in &scn.config.outputs {
        let mut files = Vec::new();
        let res = match (kind, &traj) {
            (OutputKind::Trajectory | OutputKind::Invariants | OutputKind::Oracle, Some(Err(e))) => Err(e.clone()),
            (OutputKind::Trajectory, Some(Ok((x0, tr)))) => write_trajectory(&ctx, x0, tr, &mut files),
            (OutputKind::Invariants, Some(Ok((_, tr)))) => write_invariants(&ctx, tr, &mut files),
            (OutputKind::Oracle, Some(Ok((x0, tr)))) => write_oracle(&ctx, x0, tr, &mut files),
            (OutputKind::CrossValidate, _) => write_cross_validation(&ctx, &mut files),
            (OutputKind::Certificate, _) => write_certificate(&ctx, &mut files),
            (_, None) => unreachable!("trajectory computed for every output that reads it"),
        };
        let (status, message) = match res {
            Ok((ok, m)) => (Status::of(ok), m),
            Err(m) => (Status::Error, m),
        };
        report.outputs.push(OutputReport { kind: kind.name(), status, message, files });
    }
    report.wall_time = start.elapsed().as_secs_f64();
    let _ = fs::write(ctx.dir.join("report.json"), pretty(&report.to_json()));
    report
}

type Outcome = Result<(bool, String), String>;

fn trajectory(ctx: &Ctx, cfg: &IntegratorConfig) -> Result<(Vec<f64>, Trajectory), String> {
    let initial = ctx.scn.config.initial.as_deref().expect("parser requires initial for these outputs");
    let x0 = (ctx.sys.prepare)(initial).map_err(|e| format!("initial state: {e}"))?;
    let y0 = ctx.sys.cartesian.initial_state(&x0).map_err(|e| format!("initial state: {e}"))?;
    let tr = integrate(ctx.sys.cartesian.as_ref(), &y0, cfg).map_err(|e| format!("integration: {e}"))?;
    Ok((x0, tr))
}

fn write_trajectory(ctx: &Ctx, x0: &[f64], tr: &Trajectory, files: &mut Vec<PathBuf>) -> Outcome {
    let cons = ctx.sys.cartesian.constraints();
    let invs = ctx.sys.cartesian.invariants();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(ctx.sys.state_labels.iter().map(|s| s.to_string()));
    header.extend(cons.iter().map(|m| m.name.clone()));
    header.extend(invs.iter().map(|m| m.name.clone()));
    let rows: Vec<Vec<f64>> = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(t, y)| {
            let mut r = vec![*t];
            r.extend_from_slice(y);
            r.extend(cons.iter().map(|m| m.eval(y)));
            r.extend(invs.iter().map(|m| m.eval(y)));
            r
        })
        .collect();
    write(&ctx.dir, "trajectory.csv", &csv(&header, rows.iter().cloned()), files)?;
    let mut meta = ctx.meta.clone();
    meta["initial"] = json!(x0);
    meta["termination"] = json!(termination_note(tr).unwrap_or_else(|| "completed".into()));
    meta["steps"] = json!(tr.steps);
    meta["columns"] = json!(header);
    meta["rows"] = json!(rows);
    write(&ctx.dir, "trajectory.json", &pretty(&meta), files)?;
    if ctx.plot {
        let mut s = String::new();
        for (k, name) in header.iter().enumerate().skip(1) {
            s.push_str(&format!("# t {name}\n"));
            for r in &rows {
                s.push_str(&format!("{} {}\n", fmt_num(r[0]), fmt_num(r[k])));
            }
            s.push_str("\n\n");
        }
        write(&ctx.dir, "plot.dat", &s, files)?;
    }
    Ok(match termination_note(tr) {
        None => (true, format!("{} samples to t = {}", tr.len(), fmt_num(tr.t_final()))),
        Some(n) => (false, n),
    })
}

fn write_invariants(ctx: &Ctx, tr: &Trajectory, files: &mut Vec<PathBuf>) -> Outcome {
    let tol = ctx.scn.config.tolerances;
    let d = drift_report(tr, &ctx.sys.cartesian.invariants());
    let cons: Vec<(String, f64)> = ctx
        .sys
        .cartesian
        .constraints()
        .iter()
        .map(|m| (m.name.clone(), tr.states.iter().map(|y| m.eval(y).abs()).fold(0.0, |a: f64, v| if v.is_nan() { f64::NAN } else { a.max(v) })))
        .collect();
    let drift_ok = d.entries.iter().all(|e| e.max_abs <= tol.drift);
    let cons_ok = cons.iter().all(|(_, v)| *v <= tol.constraint);
    let mut meta = ctx.meta.clone();
    meta["drift"] = json!(d
        .entries
        .iter()
        .map(|e| json!({ "name": e.name, "initial": e.initial, "max_abs": e.max_abs, "max_rel": e.max_rel, "pass": e.max_abs <= tol.drift }))
        .collect::<Vec<_>>());
    meta["constraints"] =
        json!(cons.iter().map(|(n, v)| json!({ "name": n, "max_abs": v, "pass": *v <= tol.constraint })).collect::<Vec<_>>());
    meta["termination"] = json!(termination_note(tr).unwrap_or_else(|| "completed".into()));
    write(&ctx.dir, "invariants.json", &pretty(&meta), files)?;
    let worst = d.entries.iter().map(|e| format!("{} {}", e.name, fmt_num(e.max_abs))).collect::<Vec<_>>().join(", ");
    Ok((drift_ok && cons_ok && tr.completed(), format!("max drift: {worst}")))
}

fn write_cross_validation(ctx: &Ctx, files: &mut Vec<PathBuf>) -> Outcome {
    let r = cross_validation(ctx.scn).map_err(|e| e.to_string())?;
    let mut meta = ctx.meta.clone();
    meta["report"] = cross_validation_json(&r);
    write(&ctx.dir, "cross_validation.json", &pretty(&meta), files)?;
    Ok((r.pass, format!("sup deviation {} over [0, {}]", fmt_num(r.sup_deviation), fmt_num(r.compared_until))))
}

fn write_certificate(ctx: &Ctx, files: &mut Vec<PathBuf>) -> Outcome {
    let c = &ctx.scn.config;
    let out = run_check(&ctx.sys.check, c.points, c.seed, c.tolerances.certificate);
    let header: Vec<String> = out.columns.iter().map(|s| s.to_string()).collect();
    write(&ctx.dir, "certificate.csv", &csv(&header, out.rows.iter().cloned()), files)?;
    let mut meta = ctx.meta.clone();
    meta["certificate"] = out.to_json(c.tolerances.certificate);
    write(&ctx.dir, "certificate.json", &pretty(&meta), files)?;
    let worst = out.maxima.iter().map(|(n, v)| format!("{n} {}", fmt_num(*v))).collect::<Vec<_>>().join(", ");
    Ok((out.pass, format!("{} on {}/{} points: {worst}", out.check, out.checked, out.requested)))
}

fn write_oracle(ctx: &Ctx, x0: &[f64], tr: &Trajectory, files: &mut Vec<PathBuf>) -> Outcome {
    let oracle = ctx.sys.oracle.as_ref().expect("parser rejects oracle outputs without an oracle");
    let t_end = tr.t_final();
    let samples = oracle(x0, t_end).map_err(|e| format!("reference solution: {e}"))?;
    let p = ctx.sys.position_labels;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(p.iter().map(|s| format!("{s}_exact")));
    header.extend(p.iter().map(|s| format!("{s}_numeric")));
    header.push("deviation".into());
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (t, want) in samples.iter().filter(|(t, _)| *t <= t_end) {
        let y = tr.interpolate(*t).map_err(|e| e.to_string())?;
        let got = ctx.sys.cartesian.position(&y);
        let d = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
        let mut r = vec![*t];
        r.extend_from_slice(want);
        r.extend_from_slice(&got);
        r.push(d);
        rows.push(r);
    }
    write(&ctx.dir, "oracle.csv", &csv(&header, rows.iter().cloned()), files)?;
    let tol = ctx.scn.config.tolerances.deviation;
    let mut meta = ctx.meta.clone();
    meta["oracle"] = json!({ "samples": rows.len(), "max_deviation": worst, "tolerance": tol, "pass": worst <= tol });
    write(&ctx.dir, "oracle.json", &pretty(&meta), files)?;
    let ok = worst <= tol && !rows.is_empty() && tr.completed();
    Ok((ok, format!("max deviation from the exact solution {} at {} samples", fmt_num(worst), rows.len())))
}

/// Parallelism cap from `DESCARTES_DYN_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("DESCARTES_DYN_THREADS").ok()?.trim().parse::<usize>().ok().filter(|n| *n > 0)
}

/// Run a batch concurrently; ids must be unique since each owns a directory.
pub fn run_batch(scenarios: &[Scenario], out_root: &Path, plot: bool, threads: Option<usize>) -> Result<Vec<RunReport>, CliError> {
    let mut seen = std::collections::BTreeSet::new();
    for s in scenarios {
        if !seen.insert(&s.id) {
            return Err(CliError::Config(format!("two scenarios share the id `{}`", s.id)));
        }
    }
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    Ok(pool.install(|| scenarios.par_iter().map(|s| run(s, out_root, plot)).collect()))
}
