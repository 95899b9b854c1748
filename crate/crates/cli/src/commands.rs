//! `run`, `sweep` and `validate`.

use std::fmt::Write as _;
use std::path::PathBuf;

use etpd_core::benchmark::{solve_dynamic_benchmark, solve_static_benchmark, BenchmarkSequence};
use etpd_core::bounds::{predicted_exponents, BoundOrders};
use etpd_core::engine::{run, RunOptions, RunRecord};
use etpd_core::graph::{check_joint_connectivity, validate_assumption2, FixedMixing, GraphSchedule, MixingMatrix, MixingSource};
use etpd_core::linalg::BoxSet;
use etpd_core::metrics::{averaged_series, net_ccv, net_cv_unclipped, net_regret, trigger_series, GlobalEvaluation, SeriesRow};
use etpd_core::problem::{estimate_bounds, gradient_fd_gap, sample_in_box, LinRegDims, LinRegProblem, OnlineProblem};
use etpd_core::schedules::{tau_geo, tau_poly, thm1_schedule, thm2_schedule, ScheduleSet};
use etpd_core::seeding::{self, Purpose};
use rayon::prelude::*;

use crate::config::{GraphKind, RunConfig, ScheduleConfig, TauConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, fmt_float, SweepCell};

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn build_bounds(cfg: &RunConfig) -> CliResult<BoxSet> {
    BoxSet::new(cfg.problem.box_lower.clone(), cfg.problem.box_upper.clone()).map_err(config_err)
}

pub fn build_problem(cfg: &RunConfig, seed: u64) -> CliResult<LinRegProblem> {
    let p = &cfg.problem;
    let dims = LinRegDims::new(p.n, p.p, p.q.clone(), p.m.clone()).map_err(config_err)?;
    Ok(LinRegProblem::new(dims, p.seed.unwrap_or(seed)))
}

pub fn build_mixing(cfg: &RunConfig, seed: u64) -> CliResult<Box<dyn MixingSource>> {
    let n = cfg.problem.n;
    match &cfg.graph.kind {
        GraphKind::Random { p_edge } => {
            let mut g = GraphSchedule::new(n, *p_edge, cfg.graph.seed.unwrap_or(seed)).map_err(config_err)?;
            g.window = cfg.graph.window;
            Ok(Box::new(g))
        }
        GraphKind::Fixed { weights } => {
            let matrices = weights
                .iter()
                .map(|rows| MixingMatrix::from_rows(rows))
                .collect::<etpd_core::Result<Vec<_>>>()
                .map_err(config_err)?;
            if let Some(bad) = matrices.iter().find(|m| m.agents() != n) {
                return Err(CliError::Config(format!("graph.weights is {0}x{0}, problem.n is {n}", bad.agents())));
            }
            let w_min = weights.iter().flatten().flatten().copied().filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min);
            Ok(Box::new(FixedMixing::new(matrices, w_min.min(1.0)).map_err(config_err)?))
        }
    }
}

pub fn build_schedule(s: &ScheduleConfig) -> etpd_core::Result<ScheduleSet> {
    match s {
        ScheduleConfig::Thm1 { kappa, tau } => {
            let tau = match tau {
                TauConfig::Poly { tau0, theta } => tau_poly(*tau0, *theta)?,
                TauConfig::Geo { c } => tau_geo(*c)?,
            };
            thm1_schedule(*kappa, tau)
        }
        ScheduleConfig::Thm2 { alpha0, theta1, theta2, tau0, theta3 } => {
            thm2_schedule(*alpha0, *theta1, *theta2, *tau0, *theta3)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{status} {}: {}", c.name, c.detail);
        }
        out
    }
}

const SCHEDULE_PROPERTIES: [&str; 6] = [
    "gamma_t * beta_t <= 1",
    "alpha, beta, gamma positive",
    "alpha decreasing",
    "beta decreasing",
    "gamma decreasing",
    "tau nonnegative",
];

/// Runs every validator for one seed and schedule. Configuration problems
/// are errors; failed assumptions are recorded in the report.
pub fn validate(cfg: &RunConfig, seed: u64, schedule_cfg: &ScheduleConfig) -> CliResult<ValidationReport> {
    let mut report = ValidationReport::default();
    let bounds = build_bounds(cfg)?;
    let problem = build_problem(cfg, seed)?;
    let mixing = build_mixing(cfg, seed)?;
    let horizon = cfg.horizon;

    report.push("Assumption 1: X bounded convex", true, format!("box radius R(X) = {}", bounds.radius()));
    let fd_rounds = horizon.min(5);
    let mut rng = seeding::stream(seed, Purpose::Sampling, 0, 2);
    let mut worst = 0.0f64;
    for t in 1..=fd_rounds {
        for oracle in problem.round(t) {
            for _ in 0..3 {
                let x = sample_in_box(&bounds, &mut rng);
                worst = worst.max(gradient_fd_gap(&oracle, &x, 1e-5));
            }
        }
    }
    report.push(
        "Assumption 1: loss gradients match finite differences",
        worst < 1e-6,
        format!("max |analytic - central difference| = {worst:e} over {fd_rounds} rounds"),
    );
    let est = estimate_bounds(&problem, &bounds, horizon.min(5), 8, seed);
    report.push(
        "Assumption 1: F1, F2 finite",
        est.f1.is_finite() && est.f2.is_finite(),
        format!("empirical F1 = {:.6}, F2 = {:.6}", est.f1, est.f2),
    );

    let rounds = cfg.graph.check_rounds.min(horizon.max(2) - 1).max(1);
    let mut fail_i = None;
    let mut fail_ii = None;
    for t in 1..=rounds {
        let w = mixing.mixing(t).map_err(runtime_err)?;
        let r = validate_assumption2(&w, mixing.w_min());
        if fail_i.is_none() && !r.weights_bounded_below() {
            fail_i = Some((t, r.clone()));
        }
        if fail_ii.is_none() && !r.doubly_stochastic() {
            fail_ii = Some((t, r));
        }
    }
    let named = |f: &Option<(usize, etpd_core::graph::MixingReport)>, prefix: &str| match f {
        None => format!("rounds 1..={rounds}"),
        Some((t, r)) => {
            let msg = r.failures().into_iter().find(|m| m.starts_with(&format!("{prefix}:"))).unwrap_or_default();
            format!("round {t}: {msg}")
        }
    };
    report.push("Assumption 2(i): weights bounded below", fail_i.is_none(), named(&fail_i, "Assumption 2(i)"));
    report.push("Assumption 2(ii): doubly stochastic", fail_ii.is_none(), named(&fail_ii, "Assumption 2(ii)"));
    let conn = check_joint_connectivity(mixing.as_ref(), rounds, cfg.graph.window).map_err(config_err)?;
    report.push(
        format!("Assumption 2(iii): jointly strongly connected (B = {})", cfg.graph.window),
        conn.passes(),
        match conn.first_failure {
            None => format!("{} windows", conn.windows_checked),
            Some(t) => format!("window starting at round {t} is not strongly connected"),
        },
    );

    match build_schedule(schedule_cfg) {
        Err(e) => report.push("schedule parameters", false, e.to_string()),
        Ok(schedule) => {
            report.push("schedule parameters", true, format!("{:?}", schedule.meta()));
            let scan = schedule.scan(horizon.max(2));
            let mut names: Vec<&str> = SCHEDULE_PROPERTIES.to_vec();
            if matches!(schedule_cfg, ScheduleConfig::Thm1 { .. }) {
                names.push("t^(1-kappa) - (t+1)^(1-kappa) + (t+1)^-kappa > 0");
            }
            for name in names {
                let failed = scan.failures.iter().find(|(w, _)| w == name);
                report.push(
                    format!("schedule: {name}"),
                    failed.is_none(),
                    match failed {
                        None => format!("t = 1..={}", scan.t_max),
                        Some((_, t)) => format!("first failure at t = {t}"),
                    },
                );
            }
            let tau_fail = scan.failures.iter().find(|(w, _)| w.starts_with("tau non-increasing"));
            report.push(
                "Assumption 3: tau non-increasing for t >= 2",
                tau_fail.is_none(),
                match tau_fail {
                    None => format!("t = 2..={}", scan.t_max),
                    Some((_, t)) => format!("first increase at t = {t}"),
                },
            );
            match predicted_exponents(schedule.meta()) {
                Ok(b) => report.push("bound case", true, format!("{:?} / {:?}", b.regret_case, b.ccv_case)),
                Err(e) => report.push("bound case", false, e.to_string()),
            }
        }
    }
    Ok(report)
}

/// Comparators shared by every cell of one seed.
#[derive(Debug, Clone, Default)]
pub struct Benchmarks {
    pub dynamic: Option<BenchmarkSequence>,
    pub static_: Option<BenchmarkSequence>,
}

pub fn compute_benchmarks(cfg: &RunConfig, problem: &LinRegProblem, bounds: &BoxSet) -> CliResult<Benchmarks> {
    if !cfg.engine.record_decisions {
        return Ok(Benchmarks::default());
    }
    let opts = &cfg.benchmark.solver;
    let dynamic = cfg
        .benchmark
        .dynamic
        .then(|| solve_dynamic_benchmark(problem, bounds, cfg.horizon, opts))
        .transpose()
        .map_err(runtime_err)?;
    let static_ = cfg
        .benchmark
        .static_
        .then(|| solve_static_benchmark(problem, bounds, cfg.horizon, opts))
        .transpose()
        .map_err(runtime_err)?;
    Ok(Benchmarks { dynamic, static_ })
}

/// Series and totals of one executed configuration.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub rows: Vec<SeriesRow>,
    pub record: RunRecord,
    pub with_metrics: bool,
    pub net_ccv: Option<f64>,
    pub net_cv_unclipped: Option<f64>,
    pub net_regret_dynamic: Option<f64>,
    pub net_regret_static: Option<f64>,
}

pub fn execute(
    cfg: &RunConfig,
    schedule_cfg: &ScheduleConfig,
    seed: u64,
    problem: &LinRegProblem,
    bounds: &BoxSet,
    benches: &Benchmarks,
) -> CliResult<CellOutput> {
    let mixing = build_mixing(cfg, seed)?;
    let schedule = build_schedule(schedule_cfg).map_err(|e| CliError::Validation(e.to_string()))?;
    let options = RunOptions {
        init: cfg.engine.init,
        trigger: cfg.engine.trigger,
        record_decisions: cfg.engine.record_decisions,
        record_states: false,
        seed,
    };
    let record = run(problem, mixing.as_ref(), &schedule, bounds, cfg.horizon, &options).map_err(|e| match e {
        etpd_core::Error::AssumptionViolated(m) => CliError::Validation(m),
        other => runtime_err(other),
    })?;
    if !record.has_decisions() {
        let triggers = trigger_series(&record);
        let rows = triggers
            .cumulative
            .iter()
            .enumerate()
            .map(|(k, c)| SeriesRow {
                t: k + 1,
                avg_cum_loss: f64::NAN,
                avg_cum_violation: f64::NAN,
                cum_triggers: *c,
                net_regret_dynamic: None,
                net_regret_static: None,
            })
            .collect();
        return Ok(CellOutput {
            rows,
            record,
            with_metrics: false,
            net_ccv: None,
            net_cv_unclipped: None,
            net_regret_dynamic: None,
            net_regret_static: None,
        });
    }
    let eval = GlobalEvaluation::new(&record, problem, cfg.engine.eval).map_err(runtime_err)?;
    let rows = averaged_series(&eval, &record, benches.dynamic.as_ref(), benches.static_.as_ref()).map_err(runtime_err)?;
    let regret = |b: &Option<BenchmarkSequence>| b.as_ref().map(|b| net_regret(&eval, b)).transpose().map_err(runtime_err);
    Ok(CellOutput {
        net_ccv: Some(net_ccv(&eval)),
        net_cv_unclipped: net_cv_unclipped(&eval),
        net_regret_dynamic: regret(&benches.dynamic)?,
        net_regret_static: regret(&benches.static_)?,
        rows,
        record,
        with_metrics: true,
    })
}

fn schedule_label(s: &ScheduleConfig) -> String {
    match s {
        ScheduleConfig::Thm1 { kappa, tau: TauConfig::Poly { tau0, theta } } => {
            format!("thm1 kappa={kappa} tau_t={tau0}/t^{theta}")
        }
        ScheduleConfig::Thm1 { kappa, tau: TauConfig::Geo { c } } => format!("thm1 kappa={kappa} tau_t=1/{c}^t"),
        ScheduleConfig::Thm2 { alpha0, theta1, theta2, tau0, theta3 } => {
            format!("thm2 alpha0={alpha0} theta1={theta1} theta2={theta2} tau0={tau0} theta3={theta3}")
        }
    }
}

fn bound_lines(orders: &BoundOrders) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "regret bound ({:?}):", orders.regret_case);
    for t in &orders.regret {
        let _ = writeln!(s, "  {t}    [T exponent {}]", t.exponent.value);
    }
    let _ = writeln!(s, "ccv bound ({:?}):", orders.ccv_case);
    for t in &orders.ccv {
        let _ = writeln!(s, "  {t}    [T exponent {}]", t.exponent.value);
    }
    let _ = writeln!(
        s,
        "dominant exponents: regret {}, path term {}, ccv {}",
        orders.regret_exponent(),
        orders.path_exponent().map_or("-".into(), |v| v.to_string()),
        orders.ccv_exponent()
    );
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), fmt_float)
}

/// Human-readable report for one run.
pub fn summary_text(
    cfg: &RunConfig,
    schedule_cfg: &ScheduleConfig,
    seed: u64,
    problem: &LinRegProblem,
    bounds: &BoxSet,
    benches: &Benchmarks,
    cell: &CellOutput,
) -> String {
    let mut s = String::new();
    let rec = &cell.record;
    let last = cell.rows.last();
    let per_agent = trigger_series(rec).per_agent;
    let _ = writeln!(s, "seed: {seed}");
    let _ = writeln!(s, "agents: {}  dimension: {}  horizon: {}", rec.agents(), rec.meta.dim, rec.horizon());
    let _ = writeln!(s, "schedule: {}", schedule_label(schedule_cfg));
    let _ = writeln!(s, "problem data sha256: {}", problem.fingerprint(cfg.horizon));
    let _ = writeln!(s);
    let _ = writeln!(s, "total triggers: {}", rec.total_triggers());
    let _ = writeln!(
        s,
        "triggers per agent: min {} max {}",
        per_agent.iter().min().unwrap_or(&0),
        per_agent.iter().max().unwrap_or(&0)
    );
    if cell.with_metrics {
        let _ = writeln!(s, "average cumulative loss: {}", opt(last.map(|r| r.avg_cum_loss)));
        let _ = writeln!(s, "average cumulative violation: {}", opt(last.map(|r| r.avg_cum_violation)));
    }
    let _ = writeln!(s, "network regret (dynamic): {}", opt(cell.net_regret_dynamic));
    let _ = writeln!(s, "network regret (static): {}", opt(cell.net_regret_static));
    let _ = writeln!(s, "network cumulative constraint violation: {}", opt(cell.net_ccv));
    let _ = writeln!(s, "network constraint violation, unclipped (comparative): {}", opt(cell.net_cv_unclipped));
    let _ = writeln!(s, "dynamic benchmark path length P_T: {}", opt(benches.dynamic.as_ref().map(|b| b.path_length)));
    for (name, b) in [("dynamic", &benches.dynamic), ("static", &benches.static_)] {
        if let Some(b) = b {
            if !b.flags.is_empty() {
                let _ = writeln!(s, "{name} benchmark flags: {:?}", b.flags);
            }
        }
    }
    let _ = writeln!(s, "max ||xhat - x|| - tau: {:e}", rec.max_gap_excess);
    if cfg.engine.eval != etpd_core::metrics::EvalMode::Exact {
        let _ = writeln!(s, "note: global losses and violations are sampled estimates");
    }
    let _ = writeln!(s);
    match build_schedule(schedule_cfg).map_err(|e| e.to_string()).and_then(|sc| predicted_exponents(sc.meta()).map_err(|e| e.to_string())) {
        Ok(orders) => s.push_str(&bound_lines(&orders)),
        Err(e) => {
            let _ = writeln!(s, "bound orders: {e}");
        }
    }
    let est = estimate_bounds(problem, bounds, cfg.horizon.min(10), 16, seed);
    let _ = writeln!(s, "empirical F1: {:.6}", est.f1);
    let _ = writeln!(s, "empirical F2: {:.6}", est.f2);
    s
}

fn fail_if_invalid(report: &ValidationReport) -> CliResult<()> {
    if report.passes() {
        Ok(())
    } else {
        let names: Vec<String> = report.failures().iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
        Err(CliError::Validation(names.join("; ")))
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub series: PathBuf,
    pub summary: PathBuf,
    pub summary_text: String,
}

fn series_meta(cfg: &RunConfig, schedule_cfg: &ScheduleConfig, seed: u64, hash: &str) -> Vec<String> {
    vec![
        format!("seed = {seed}"),
        format!("horizon = {}", cfg.horizon),
        format!("schedule = {}", schedule_label(schedule_cfg)),
        format!("problem_sha256 = {hash}"),
    ]
}

pub fn cmd_run(cfg: &RunConfig) -> CliResult<RunArtifacts> {
    let seed = cfg.seed;
    fail_if_invalid(&validate(cfg, seed, &cfg.schedule)?)?;
    let bounds = build_bounds(cfg)?;
    let problem = build_problem(cfg, seed)?;
    let benches = compute_benchmarks(cfg, &problem, &bounds)?;
    let cell = execute(cfg, &cfg.schedule, seed, &problem, &bounds, &benches)?;
    let hash = problem.fingerprint(cfg.horizon);
    let series = cfg.out_dir.join("series.csv");
    output::write_series(&series, &series_meta(cfg, &cfg.schedule, seed, &hash), &cell.rows, cell.with_metrics)?;
    let text = summary_text(cfg, &cfg.schedule, seed, &problem, &bounds, &benches, &cell);
    let summary = cfg.out_dir.join("summary.txt");
    output::write_text(&summary, &text)?;
    Ok(RunArtifacts { series, summary, summary_text: text })
}

#[derive(Debug, Clone)]
pub struct SweepArtifacts {
    pub long: PathBuf,
    pub summary: PathBuf,
    pub cells: usize,
}

fn tau_dir(tau0: Option<f64>) -> String {
    tau0.map_or("tau0_none".into(), |v| format!("tau0_{v}"))
}

/// Runs the cross product of `sweep.tau0` and `sweep.seeds` on a pool of
/// `workers` threads. Problem data and benchmarks are shared per seed.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<SweepArtifacts> {
    if cfg.sweep.seeds.is_empty() {
        return Err(CliError::Config("sweep.seeds is empty".into()));
    }
    let schedules: Vec<(Option<f64>, ScheduleConfig)> = if cfg.sweep.tau0.is_empty() {
        vec![(cfg.schedule.tau0(), cfg.schedule.clone())]
    } else {
        cfg.sweep
            .tau0
            .iter()
            .map(|v| Ok((Some(*v), cfg.schedule.with_tau0(*v)?)))
            .collect::<CliResult<_>>()?
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(runtime_err)?;

    struct SeedData {
        seed: u64,
        problem: LinRegProblem,
        hash: String,
        benches: Benchmarks,
    }
    let bounds = build_bounds(cfg)?;
    let per_seed: Vec<SeedData> = pool.install(|| {
        cfg.sweep
            .seeds
            .par_iter()
            .map(|&seed| {
                for (_, sc) in &schedules {
                    fail_if_invalid(&validate(cfg, seed, sc)?)?;
                }
                let problem = build_problem(cfg, seed)?;
                let benches = compute_benchmarks(cfg, &problem, &bounds)?;
                let hash = problem.fingerprint(cfg.horizon);
                Ok(SeedData { seed, problem, hash, benches })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let jobs: Vec<(usize, usize)> = (0..schedules.len())
        .flat_map(|a| (0..per_seed.len()).map(move |b| (a, b)))
        .collect();
    let outputs: Vec<CellOutput> = pool.install(|| {
        jobs.par_iter()
            .map(|&(a, b)| {
                let (tau0, sc) = &schedules[a];
                let sd = &per_seed[b];
                let cell = execute(cfg, sc, sd.seed, &sd.problem, &bounds, &sd.benches)?;
                let dir = cfg.out_dir.join("cells").join(format!("{}_seed_{}", tau_dir(*tau0), sd.seed));
                output::write_series(&dir.join("series.csv"), &series_meta(cfg, sc, sd.seed, &sd.hash), &cell.rows, cell.with_metrics)?;
                Ok(cell)
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let cells: Vec<SweepCell<'_>> = jobs
        .iter()
        .zip(&outputs)
        .map(|(&(a, b), out)| SweepCell { tau0: schedules[a].0, seed: per_seed[b].seed, rows: &out.rows, with_metrics: out.with_metrics })
        .collect();
    let mut meta = vec![format!("horizon = {}", cfg.horizon), format!("schedule = {}", schedule_label(&cfg.schedule))];
    meta.extend(per_seed.iter().map(|sd| format!("problem_sha256 seed={} = {}", sd.seed, sd.hash)));
    let long = cfg.out_dir.join("sweep.csv");
    output::write_sweep(&long, &meta, &cells)?;
    let summary = cfg.out_dir.join("sweep_summary.csv");
    output::write_sweep_summary(&summary, &meta, &cells)?;
    Ok(SweepArtifacts { long, summary, cells: cells.len() })
}

/// Validates every configured seed against the base schedule.
pub fn cmd_validate(cfg: &RunConfig) -> CliResult<ValidationReport> {
    validate(cfg, cfg.seed, &cfg.schedule)
}
