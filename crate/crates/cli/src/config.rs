//! Scenario files: one `key = value` pair per line, `#` starts a comment,
//! arrays are written `[a, b, c]`.

use std::collections::BTreeMap;
use std::fmt;

use crate::catalog::{self, ParamKind};

pub const SCHEMA: &str = "  name            scenario id (default: file stem)
  system          catalog name (required; see `descartes-dyn catalog`)
  params.<p>      system parameter, a number or [array]
  initial         initial state [x1, x2, x3]
  t_end           final time (default 10)
  method          rk4 | rk45 (default rk4, or rk45 when rtol/atol are given)
  step            RK4 step (default 1e-3)
  rtol, atol      RK45 tolerances (default 1e-9, 1e-12)
  sample          output interval; omit to keep every step
  projection      true | false, project after each step (default false)
  outputs         [trajectory, invariants, cross-validate, certificate, oracle]
                  (default trajectory, or certificate without `initial`)
  seed            integer seed for sample clouds (default 0)
  points          certificate sample size (default 200)
  tol.deviation   cross-validation and oracle sup-norm tolerance (default 1e-5)
  tol.drift       first-integral drift tolerance (default 1e-7)
  tol.constraint  constraint residual tolerance (default 1e-8)
  tol.certificate Cartesian-condition tolerance (default 1e-6)";

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, message: String },
    Schema { key: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Syntax { line, message } => write!(f, "line {line}: {message}"),
            Self::Schema { key, message } => write!(f, "key `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutputKind {
    Trajectory,
    Invariants,
    CrossValidate,
    Certificate,
    Oracle,
}

impl OutputKind {
    pub const ALL: [OutputKind; 5] =
        [Self::Trajectory, Self::Invariants, Self::CrossValidate, Self::Certificate, Self::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Trajectory => "trajectory",
            Self::Invariants => "invariants",
            Self::CrossValidate => "cross-validate",
            Self::Certificate => "certificate",
            Self::Oracle => "oracle",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether the output integrates from `initial`.
    pub fn needs_initial(self) -> bool {
        !matches!(self, Self::Certificate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Rk4 { step: f64 },
    Rk45 { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub deviation: f64,
    pub drift: f64,
    pub constraint: f64,
    pub certificate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { deviation: 1e-5, drift: 1e-7, constraint: 1e-8, certificate: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub system: String,
    pub params: BTreeMap<String, Vec<f64>>,
    pub initial: Option<Vec<f64>>,
    pub t_end: f64,
    pub method: MethodSpec,
    pub sample: Option<f64>,
    pub projection: bool,
    pub outputs: Vec<OutputKind>,
    pub seed: u64,
    pub points: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq)]
enum Raw {
    Scalar(String),
    List(Vec<String>),
}

struct Entry {
    line: usize,
    value: Raw,
}

fn split_value(line: usize, text: &str) -> Result<Raw, ConfigError> {
    let syntax = |m: &str| ConfigError::Syntax { line, message: m.to_string() };
    if let Some(rest) = text.strip_prefix('[') {
        let inner = rest.strip_suffix(']').ok_or_else(|| syntax("unterminated array, expected `]`"))?;
        if inner.contains('[') || inner.contains(']') {
            return Err(syntax("nested arrays are not supported"));
        }
        if inner.trim().is_empty() {
            return Ok(Raw::List(Vec::new()));
        }
        let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
        if items.iter().any(|s| s.is_empty()) {
            return Err(syntax("empty array element"));
        }
        Ok(Raw::List(items))
    } else if text.contains(']') || text.contains(',') {
        Err(syntax("stray `]` or `,` outside an array"))
    } else if text.is_empty() {
        Err(syntax("missing value after `=`"))
    } else {
        Ok(Raw::Scalar(text.to_string()))
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut out: BTreeMap<String, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, found `{body}`") })?;
        let key = key.trim();
        if key.is_empty() || key.chars().any(|c| c.is_whitespace()) {
            return Err(ConfigError::Syntax { line, message: format!("malformed key `{key}`") });
        }
        let value = split_value(line, value.trim())?;
        if let Some(prev) = out.get(key) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        out.insert(key.to_string(), Entry { line, value });
    }
    Ok(out)
}

fn number(key: &str, line: usize, s: &str) -> Result<f64, ConfigError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigError::Syntax { line, message: format!("`{key}`: `{s}` is not a finite number") }),
    }
}

fn numbers(key: &str, e: &Entry) -> Result<Vec<f64>, ConfigError> {
    match &e.value {
        Raw::Scalar(s) => Ok(vec![number(key, e.line, s)?]),
        Raw::List(items) => items.iter().map(|s| number(key, e.line, s)).collect(),
    }
}

fn scalar<'a>(key: &str, e: &'a Entry) -> Result<&'a str, ConfigError> {
    match &e.value {
        Raw::Scalar(s) => Ok(s),
        Raw::List(_) => Err(ConfigError::Schema { key: key.into(), message: "expected a single value, not an array".into() }),
    }
}

fn positive(key: &str, e: &Entry) -> Result<f64, ConfigError> {
    let v = number(key, e.line, scalar(key, e)?)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::Schema { key: key.into(), message: format!("must be positive, got {v}") })
    }
}

fn count(key: &str, e: &Entry) -> Result<u64, ConfigError> {
    scalar(key, e)?
        .parse::<u64>()
        .map_err(|_| ConfigError::Schema { key: key.into(), message: "expected a non-negative integer".into() })
}

const KEYS: [&str; 16] = [
    "name", "system", "initial", "t_end", "method", "step", "rtol", "atol", "sample", "projection", "outputs",
    "seed", "points", "tol.deviation", "tol.drift", "tol.constraint",
];

fn known_key(k: &str) -> bool {
    KEYS.contains(&k) || k == "tol.certificate" || k.strip_prefix("params.").is_some_and(|p| !p.is_empty())
}

/// Parse and validate a scenario against the catalog schema.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut map = tokenize(text)?;
    if let Some((k, e)) = map.iter().find(|(k, _)| !known_key(k)) {
        return Err(ConfigError::Syntax { line: e.line, message: format!("unknown key `{k}`; accepted keys:\n{SCHEMA}") });
    }
    let schema = |key: &str, message: String| ConfigError::Schema { key: key.into(), message };

    let system_entry = map.remove("system").ok_or_else(|| schema("system", "required".into()))?;
    let system = scalar("system", &system_entry)?.to_string();
    let info = catalog::lookup(&system).ok_or_else(|| {
        let hint = catalog::suggest(&system).map(|s| format!("; did you mean `{s}`?")).unwrap_or_default();
        schema("system", format!("unknown system `{system}`{hint}"))
    })?;

    let mut params = BTreeMap::new();
    let keys: Vec<String> = map.keys().filter(|k| k.starts_with("params.")).cloned().collect();
    for key in keys {
        let e = map.remove(&key).expect("key listed above");
        let p = &key["params.".len()..];
        let spec = info.params.iter().find(|s| s.name == p).ok_or_else(|| {
            let names: Vec<&str> = info.params.iter().map(|s| s.name).collect();
            schema(&key, format!("`{system}` has no parameter `{p}`; it takes {}", names.join(", ")))
        })?;
        let v = numbers(&key, &e)?;
        let ok = match spec.kind {
            ParamKind::Scalar => v.len() == 1 && matches!(e.value, Raw::Scalar(_)),
            ParamKind::Vector(n) => v.len() == n && matches!(e.value, Raw::List(_)),
        };
        if !ok {
            return Err(schema(&key, format!("expected {}, got {} value(s)", spec.kind.describe(), v.len())));
        }
        params.insert(p.to_string(), v);
    }
    for spec in info.params.iter().filter(|s| s.required) {
        if !params.contains_key(spec.name) {
            return Err(schema(&format!("params.{}", spec.name), format!("required by `{system}` ({})", spec.help)));
        }
    }

    // cross-parameter conditions (e.g. (b, c) = 0) are enforced by the builders
    if let Err(m) = info.build(&info.resolve(&params)) {
        return Err(schema("params", m));
    }

    let initial = match map.remove("initial") {
        Some(e) => {
            let v = numbers("initial", &e)?;
            if v.len() != info.state_len || !matches!(e.value, Raw::List(_)) {
                return Err(schema("initial", format!("`{system}` expects {} values: {}", info.state_len, info.state)));
            }
            Some(v)
        }
        None => None,
    };

    let t_end = map.remove("t_end").map(|e| positive("t_end", &e)).transpose()?.unwrap_or(10.0);
    let step = map.remove("step").map(|e| positive("step", &e)).transpose()?;
    let rtol = map.remove("rtol").map(|e| positive("rtol", &e)).transpose()?;
    let atol = map.remove("atol").map(|e| positive("atol", &e)).transpose()?;
    let method_name = map.remove("method").map(|e| scalar("method", &e).map(str::to_string)).transpose()?;
    let adaptive = match method_name.as_deref() {
        None => rtol.is_some() || atol.is_some(),
        Some("rk4") => false,
        Some("rk45") => true,
        Some(other) => return Err(schema("method", format!("`{other}` is not rk4 or rk45"))),
    };
    let method = if adaptive {
        if step.is_some() {
            return Err(schema("step", "only used by rk4; rk45 takes rtol/atol".into()));
        }
        MethodSpec::Rk45 { rtol: rtol.unwrap_or(1e-9), atol: atol.unwrap_or(1e-12) }
    } else {
        if rtol.is_some() || atol.is_some() {
            return Err(schema("rtol", "only used by rk45".into()));
        }
        MethodSpec::Rk4 { step: step.unwrap_or(1e-3) }
    };
    let sample = map.remove("sample").map(|e| positive("sample", &e)).transpose()?;
    let projection = match map.remove("projection") {
        None => false,
        Some(e) => match scalar("projection", &e)? {
            "true" => true,
            "false" => false,
            other => return Err(schema("projection", format!("expected true or false, got `{other}`"))),
        },
    };

    let outputs = match map.remove("outputs") {
        // without an initial state only the field check can run
        None if initial.is_some() => vec![OutputKind::Trajectory],
        None => vec![OutputKind::Certificate],
        Some(e) => {
            let items = match &e.value {
                Raw::Scalar(s) => vec![s.clone()],
                Raw::List(v) => v.clone(),
            };
            let mut out = Vec::new();
            for s in items {
                let k = OutputKind::parse(&s).ok_or_else(|| {
                    let names: Vec<&str> = OutputKind::ALL.iter().map(|k| k.name()).collect();
                    schema("outputs", format!("unknown output `{s}`; choose from {}", names.join(", ")))
                })?;
                if !out.contains(&k) {
                    out.push(k);
                }
            }
            out.sort();
            out
        }
    };
    for (k, available) in [(OutputKind::CrossValidate, info.classical), (OutputKind::Oracle, info.oracle)] {
        if outputs.contains(&k) && !available {
            return Err(schema("outputs", format!("`{system}` has no {} counterpart", if k == OutputKind::Oracle { "exact" } else { "classical" })));
        }
    }
    if initial.is_none() {
        if let Some(k) = outputs.iter().find(|k| k.needs_initial()) {
            return Err(schema("initial", format!("required by the `{}` output", k.name())));
        }
    }

    let seed = map.remove("seed").map(|e| count("seed", &e)).transpose()?.unwrap_or(0);
    let points = map.remove("points").map(|e| count("points", &e)).transpose()?.unwrap_or(200) as usize;
    if points == 0 {
        return Err(schema("points", "must be at least 1".into()));
    }
    let mut tolerances = Tolerances::default();
    for (key, slot) in [
        ("tol.deviation", &mut tolerances.deviation),
        ("tol.drift", &mut tolerances.drift),
        ("tol.constraint", &mut tolerances.constraint),
        ("tol.certificate", &mut tolerances.certificate),
    ] {
        if let Some(e) = map.remove(key) {
            *slot = positive(key, &e)?;
        }
    }
    let name = map.remove("name").map(|e| scalar("name", &e).map(str::to_string)).transpose()?;
    if let Some(n) = &name {
        if n.is_empty() || n.contains(['/', '\\']) || n == "." || n == ".." {
            return Err(schema("name", format!("`{n}` cannot be used as a directory name")));
        }
    }
    debug_assert!(map.is_empty(), "every known key is consumed");

    Ok(ScenarioConfig {
        name,
        system,
        params,
        initial,
        t_end,
        method,
        sample,
        projection,
        outputs,
        seed,
        points,
        tolerances,
    })
}
