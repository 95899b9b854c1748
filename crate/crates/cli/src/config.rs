//! Run configuration: a TOML file plus dotted `KEY=VALUE` overrides.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use etpd_core::benchmark::SolverOptions;
use etpd_core::engine::{InitRule, TriggerMode};
use etpd_core::metrics::EvalMode;
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub n: usize,
    pub p: usize,
    pub q: Vec<usize>,
    pub m: Vec<usize>,
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
    /// Data seed; the master seed when absent.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    Random { p_edge: f64 },
    /// Explicit matrices, cycled over rounds.
    Fixed { weights: Vec<Vec<Vec<f64>>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub seed: Option<u64>,
    pub window: usize,
    /// Rounds inspected by the validators.
    pub check_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TauConfig {
    Poly { tau0: f64, theta: f64 },
    Geo { c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleConfig {
    Thm1 { kappa: f64, tau: TauConfig },
    Thm2 { alpha0: f64, theta1: f64, theta2: f64, tau0: f64, theta3: f64 },
}

impl ScheduleConfig {
    /// Replaces the threshold scale `tau0`; geometric thresholds have none.
    pub fn with_tau0(&self, value: f64) -> CliResult<Self> {
        match self {
            Self::Thm2 { alpha0, theta1, theta2, theta3, .. } => Ok(Self::Thm2 {
                alpha0: *alpha0,
                theta1: *theta1,
                theta2: *theta2,
                tau0: value,
                theta3: *theta3,
            }),
            Self::Thm1 { kappa, tau: TauConfig::Poly { theta, .. } } => {
                Ok(Self::Thm1 { kappa: *kappa, tau: TauConfig::Poly { tau0: value, theta: *theta } })
            }
            Self::Thm1 { tau: TauConfig::Geo { .. }, .. } => {
                Err(CliError::Config("sweep.tau0 needs a polynomial threshold (schedule.tau_family = \"poly\")".into()))
            }
        }
    }

    pub fn tau0(&self) -> Option<f64> {
        match self {
            Self::Thm2 { tau0, .. } | Self::Thm1 { tau: TauConfig::Poly { tau0, .. }, .. } => Some(*tau0),
            Self::Thm1 { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub init: InitRule,
    pub trigger: TriggerMode,
    pub record_decisions: bool,
    pub eval: EvalMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub dynamic: bool,
    pub static_: bool,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub tau0: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub horizon: usize,
    pub problem: ProblemConfig,
    pub graph: GraphConfig,
    pub schedule: ScheduleConfig,
    pub engine: EngineConfig,
    pub benchmark: BenchmarkConfig,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub sweep: SweepConfig,
}

/// Command-line overrides applied after the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub sets: Vec<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Inserts `value` at a dotted `key`, creating sections as needed.
pub fn apply_set(table: &mut Table, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{assignment}`")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key `{key}`")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{part}` in `{key}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Typed lookups that remember which keys were consumed.
struct Reader<'a> {
    root: &'a Table,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Reader<'a> {
    fn new(root: &'a Table) -> Self {
        Self { root, used: RefCell::new(BTreeSet::new()) }
    }

    fn lookup(&self, key: &str) -> Option<&'a Value> {
        self.used.borrow_mut().insert(key.to_string());
        let mut cur = self.root;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            cur = cur.get(*part)?.as_table()?;
        }
        cur.get(parts[parts.len() - 1])
    }

    fn required(&self, key: &str) -> CliResult<&'a Value> {
        self.lookup(key).ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    fn type_err(key: &str, want: &str, v: &Value) -> CliError {
        CliError::Config(format!("`{key}` must be {want}, got {v}"))
    }

    fn as_f64(key: &str, v: &Value) -> CliResult<f64> {
        match v {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(Self::type_err(key, "a number", v)),
        }
    }

    fn as_u64(key: &str, v: &Value) -> CliResult<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as u64),
            _ => Err(Self::type_err(key, "a non-negative integer", v)),
        }
    }

    fn f64_req(&self, key: &str) -> CliResult<f64> {
        Self::as_f64(key, self.required(key)?)
    }

    fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        self.lookup(key).map_or(Ok(default), |v| Self::as_f64(key, v))
    }

    fn u64_opt(&self, key: &str) -> CliResult<Option<u64>> {
        self.lookup(key).map(|v| Self::as_u64(key, v)).transpose()
    }

    fn usize_req(&self, key: &str) -> CliResult<usize> {
        Ok(Self::as_u64(key, self.required(key)?)? as usize)
    }

    fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        Ok(self.u64_opt(key)?.map_or(default, |v| v as usize))
    }

    fn bool_or(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.lookup(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(Self::type_err(key, "true or false", v)),
        }
    }

    fn str_or(&self, key: &str, default: &str) -> CliResult<String> {
        match self.lookup(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(Self::type_err(key, "a string", v)),
        }
    }

    /// A scalar broadcast to `len` entries, or an array of exactly `len`.
    fn per_agent<T>(&self, key: &str, len: usize, conv: impl Fn(&str, &Value) -> CliResult<T>, default: Option<T>) -> CliResult<Vec<T>>
    where
        T: Clone,
    {
        let v = match (self.lookup(key), default) {
            (Some(v), _) => v,
            (None, Some(d)) => return Ok(vec![d; len]),
            (None, None) => return Err(CliError::Config(format!("missing required key `{key}`"))),
        };
        match v {
            Value::Array(items) => {
                if items.len() != len {
                    return Err(CliError::Config(format!("`{key}` needs {len} entries, got {}", items.len())));
                }
                items.iter().map(|x| conv(key, x)).collect()
            }
            other => Ok(vec![conv(key, other)?; len]),
        }
    }

    fn list<T>(&self, key: &str, conv: impl Fn(&str, &Value) -> CliResult<T>) -> CliResult<Option<Vec<T>>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items.iter().map(|x| conv(key, x)).collect::<CliResult<Vec<T>>>().map(Some),
            Some(other) => Ok(Some(vec![conv(key, other)?])),
        }
    }

    /// Leaf keys present in the table that were never read.
    fn unused(&self) -> Vec<String> {
        fn leaves(prefix: &str, t: &Table, out: &mut Vec<String>) {
            for (k, v) in t {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match v {
                    Value::Table(inner) => leaves(&path, inner, out),
                    _ => out.push(path),
                }
            }
        }
        let mut all = Vec::new();
        leaves("", self.root, &mut all);
        let used = self.used.borrow();
        all.into_iter().filter(|k| !used.contains(k)).collect()
    }
}

fn matrix_rows(key: &str, v: &Value) -> CliResult<Vec<Vec<f64>>> {
    let rows = v.as_array().ok_or_else(|| Reader::type_err(key, "an array of rows", v))?;
    rows.iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Reader::type_err(key, "an array of rows", r))?
                .iter()
                .map(|x| Reader::as_f64(key, x))
                .collect()
        })
        .collect()
}

/// Builds a [`RunConfig`] from a parsed table. Unknown keys are rejected.
pub fn from_table(root: &Table) -> CliResult<RunConfig> {
    let r = Reader::new(root);
    let seed = r.u64_opt("seed")?.unwrap_or(0);
    let horizon = r.usize_req("horizon")?;
    if horizon == 0 {
        return Err(CliError::Config("`horizon` must be positive".into()));
    }

    let family = r.str_or("problem.family", "linreg")?;
    if family != "linreg" {
        return Err(CliError::Config(format!("unknown problem.family `{family}` (expected \"linreg\")")));
    }
    let n = r.usize_req("problem.n")?;
    let p = r.usize_req("problem.p")?;
    let to_usize = |k: &str, v: &Value| Reader::as_u64(k, v).map(|x| x as usize);
    let problem = ProblemConfig {
        n,
        p,
        q: r.per_agent("problem.q", n, to_usize, None)?,
        m: r.per_agent("problem.m", n, to_usize, None)?,
        box_lower: r.per_agent("problem.box_lower", p, Reader::as_f64, Some(-5.0))?,
        box_upper: r.per_agent("problem.box_upper", p, Reader::as_f64, Some(5.0))?,
        seed: r.u64_opt("problem.seed")?,
    };

    let kind = match r.str_or("graph.kind", "random")?.as_str() {
        "random" => GraphKind::Random { p_edge: r.f64_or("graph.p_edge", 0.1)? },
        "fixed" => {
            let v = r.required("graph.weights")?;
            let nested = v.as_array().and_then(|a| a.first()).and_then(|f| f.as_array()).and_then(|f| f.first());
            let weights = match nested {
                Some(Value::Array(_)) => v
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|m| matrix_rows("graph.weights", m))
                    .collect::<CliResult<Vec<_>>>()?,
                _ => vec![matrix_rows("graph.weights", v)?],
            };
            GraphKind::Fixed { weights }
        }
        other => return Err(CliError::Config(format!("unknown graph.kind `{other}` (expected \"random\" or \"fixed\")"))),
    };
    let graph = GraphConfig {
        kind,
        seed: r.u64_opt("graph.seed")?,
        window: r.usize_or("graph.window", 1)?,
        check_rounds: r.usize_or("graph.check_rounds", 100)?,
    };

    let schedule = match r.required("schedule.kind")?.as_str() {
        Some("thm1") => {
            let kappa = r.f64_req("schedule.kappa")?;
            let tau = match r.str_or("schedule.tau_family", "poly")?.as_str() {
                "poly" => TauConfig::Poly { tau0: r.f64_or("schedule.tau0", 1.0)?, theta: r.f64_or("schedule.theta", 1.0)? },
                "geo" => TauConfig::Geo { c: r.f64_req("schedule.c")? },
                other => return Err(CliError::Config(format!("unknown schedule.tau_family `{other}`"))),
            };
            ScheduleConfig::Thm1 { kappa, tau }
        }
        Some("thm2") => ScheduleConfig::Thm2 {
            alpha0: r.f64_or("schedule.alpha0", 1.0)?,
            theta1: r.f64_req("schedule.theta1")?,
            theta2: r.f64_req("schedule.theta2")?,
            tau0: r.f64_req("schedule.tau0")?,
            theta3: r.f64_req("schedule.theta3")?,
        },
        _ => return Err(CliError::Config("`schedule.kind` must be \"thm1\" or \"thm2\"".into())),
    };

    let init = match r.str_or("engine.init", "origin")?.as_str() {
        "origin" => InitRule::Origin,
        "uniform" => InitRule::Uniform { seed: r.u64_opt("engine.init_seed")?.unwrap_or(seed) },
        other => return Err(CliError::Config(format!("unknown engine.init `{other}`"))),
    };
    let trigger = match r.str_or("engine.trigger", "event")?.as_str() {
        "event" => TriggerMode::EventTriggered,
        "always" => TriggerMode::AlwaysBroadcast,
        other => return Err(CliError::Config(format!("unknown engine.trigger `{other}`"))),
    };
    let eval = match r.str_or("engine.eval", "exact")?.as_str() {
        "exact" => EvalMode::Exact,
        "sampled" => EvalMode::Sampled { agents: r.usize_req("engine.eval_agents")?, seed },
        other => return Err(CliError::Config(format!("unknown engine.eval `{other}`"))),
    };
    let engine = EngineConfig { init, trigger, record_decisions: r.bool_or("engine.record_decisions", true)?, eval };

    let kinds = r
        .list("benchmark.kinds", |k, v| {
            v.as_str().map(str::to_string).ok_or_else(|| Reader::type_err(k, "a list of strings", v))
        })?
        .unwrap_or_else(|| vec!["dynamic".into(), "static".into()]);
    if let Some(bad) = kinds.iter().find(|k| !matches!(k.as_str(), "dynamic" | "static")) {
        return Err(CliError::Config(format!("unknown benchmark kind `{bad}`")));
    }
    let defaults = SolverOptions::default();
    let solver = SolverOptions {
        tolerance: r.f64_or("benchmark.tolerance", defaults.tolerance)?,
        max_outer: r.usize_or("benchmark.max_outer", defaults.max_outer)?,
        max_inner: r.usize_or("benchmark.max_inner", defaults.max_inner)?,
        penalty: r.f64_or("benchmark.penalty", defaults.penalty)?,
        grid_pitch: r.f64_or("benchmark.grid_pitch", defaults.grid_pitch)?,
        cross_check: r.bool_or("benchmark.cross_check", defaults.cross_check)?,
        agreement_tol: r.f64_or("benchmark.agreement_tol", defaults.agreement_tol)?,
        grid_tol: r.f64_or("benchmark.grid_tol", defaults.grid_tol)?,
        seed,
    };
    let benchmark = BenchmarkConfig {
        dynamic: kinds.iter().any(|k| k == "dynamic"),
        static_: kinds.iter().any(|k| k == "static"),
        solver,
    };

    let sweep = SweepConfig {
        tau0: r.list("sweep.tau0", Reader::as_f64)?.unwrap_or_default(),
        seeds: r.list("sweep.seeds", Reader::as_u64)?.unwrap_or_else(|| vec![seed]),
    };
    let out_dir = PathBuf::from(r.str_or("output.dir", "out")?);
    let workers = r.usize_or("sweep.workers", 1)?.max(1);

    let unused = r.unused();
    if !unused.is_empty() {
        return Err(CliError::Config(format!("unknown key(s): {}", unused.join(", "))));
    }
    Ok(RunConfig { seed, horizon, problem, graph, schedule, engine, benchmark, out_dir, workers, sweep })
}

/// Reads the optional file, applies `--set` assignments and then the
/// dedicated flags.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    for s in &overrides.sets {
        apply_set(&mut table, s)?;
    }
    if let Some(seed) = overrides.seed {
        apply_set(&mut table, &format!("seed={seed}"))?;
    }
    if let Some(w) = overrides.workers {
        apply_set(&mut table, &format!("sweep.workers={w}"))?;
    }
    let mut cfg = from_table(&table)?;
    if let Some(out) = &overrides.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}
