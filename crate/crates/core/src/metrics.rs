//! Network regret, cumulative constraint violation and running averages.

use nalgebra::DVector;
use rand::seq::index::sample;

use crate::benchmark::BenchmarkSequence;
use crate::engine::RunRecord;
use crate::error::{Error, Result};
use crate::linalg::DecisionVector;
use crate::problem::{LocalOracle, OnlineProblem};
use crate::seeding::{self, Purpose};

/// How the global quantities `f_t(x)` and `||[g_t(x)]+||` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// All `n` local oracles at every agent's decision.
    Exact,
    /// Approximate: `k` agents' oracles sampled per round, rescaled.
    Sampled { agents: usize, seed: u64 },
}

/// Global loss and clipped violation at each recorded decision `x_{i,t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalEvaluation {
    horizon: usize,
    agents: usize,
    loss: Vec<f64>,
    violation: Vec<f64>,
    /// Per agent, `sum_t g_t(x_{i,t})` (stacked, unclipped).
    raw_sums: Vec<DVector<f64>>,
    pub approximate: bool,
}

impl GlobalEvaluation {
    /// Evaluates `record` against `problem`; the record must carry decisions.
    pub fn new<P: OnlineProblem>(record: &RunRecord, problem: &P, mode: EvalMode) -> Result<Self> {
        let n = record.agents();
        let horizon = record.horizon();
        if problem.agents() != n {
            return Err(Error::DimensionMismatch { context: "evaluation agents", expected: n, actual: problem.agents() });
        }
        if !record.has_decisions() {
            return Err(Error::InvalidParameter("run record holds no decisions; enable record_decisions".into()));
        }
        let m_total: usize = (0..n).map(|j| problem.constraint_count(j)).sum();
        let mut loss = Vec::with_capacity(horizon * n);
        let mut violation = Vec::with_capacity(horizon * n);
        let mut raw_sums = vec![DVector::zeros(m_total); n];
        for t in 1..=horizon {
            let oracles = problem.round(t);
            let chosen: Vec<usize> = match mode {
                EvalMode::Exact => (0..n).collect(),
                EvalMode::Sampled { agents, seed } => {
                    let mut rng = seeding::stream(seed, Purpose::Sampling, t as u64, 0);
                    let mut idx = sample(&mut rng, n, agents.clamp(1, n)).into_vec();
                    idx.sort_unstable();
                    idx
                }
            };
            let scale = n as f64 / chosen.len() as f64;
            for (i, sums) in raw_sums.iter_mut().enumerate() {
                let x = record.decision(t, i).expect("decisions present").as_dvector();
                let mut f = 0.0;
                let mut sq = 0.0;
                for &j in &chosen {
                    f += oracles[j].loss(x);
                    sq += oracles[j].constraint(x).iter().map(|g| g.max(0.0).powi(2)).sum::<f64>();
                }
                loss.push(f / chosen.len() as f64);
                violation.push((scale * sq).sqrt());
                if mode == EvalMode::Exact {
                    let mut r = 0;
                    for o in &oracles {
                        let g = o.constraint(x);
                        let len = g.len();
                        let mut block = sums.rows_mut(r, len);
                        block += g;
                        r += len;
                    }
                }
            }
        }
        Ok(Self { horizon, agents: n, loss, violation, raw_sums, approximate: mode != EvalMode::Exact })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    /// `f_t(x_{i,t})`.
    pub fn loss(&self, t: usize, i: usize) -> f64 {
        self.loss[(t - 1) * self.agents + i]
    }

    /// `||[g_t(x_{i,t})]+||`.
    pub fn violation(&self, t: usize, i: usize) -> f64 {
        self.violation[(t - 1) * self.agents + i]
    }

    /// `(1/n) sum_i f_t(x_{i,t})`.
    pub fn round_loss(&self, t: usize) -> f64 {
        (0..self.agents).map(|i| self.loss(t, i)).sum::<f64>() / self.agents as f64
    }

    /// `(1/n) sum_i ||[g_t(x_{i,t})]+||`.
    pub fn round_violation(&self, t: usize) -> f64 {
        (0..self.agents).map(|i| self.violation(t, i)).sum::<f64>() / self.agents as f64
    }
}

/// `(1/n) sum_i sum_t f_t(x_{i,t}) - sum_t f_t(y_t)`.
pub fn net_regret(eval: &GlobalEvaluation, bench: &BenchmarkSequence) -> Result<f64> {
    if bench.horizon() != eval.horizon() || bench.losses.len() != eval.horizon() {
        return Err(Error::LengthMismatch(format!(
            "benchmark covers {} rounds, run covers {}",
            bench.horizon(),
            eval.horizon()
        )));
    }
    let played: f64 = (1..=eval.horizon()).map(|t| eval.round_loss(t)).sum();
    Ok(played - bench.total_loss())
}

/// `(1/n) sum_i sum_t ||[g_t(x_{i,t})]+||`.
pub fn net_ccv(eval: &GlobalEvaluation) -> f64 {
    (1..=eval.horizon()).map(|t| eval.round_violation(t)).sum()
}

/// `(1/n) sum_i ||[sum_t g_t(x_{i,t})]+||`, the looser comparative metric in
/// which violations may cancel across rounds. Not available for sampled
/// evaluations.
pub fn net_cv_unclipped(eval: &GlobalEvaluation) -> Option<f64> {
    if eval.approximate {
        return None;
    }
    let total: f64 = eval.raw_sums.iter().map(|s| s.map(|v| v.max(0.0)).norm()).sum();
    Some(total / eval.agents as f64)
}

/// `sum_{t<T} ||y_{t+1} - y_t||`.
pub fn path_length(decisions: &[DecisionVector]) -> f64 {
    decisions.windows(2).map(|w| w[1].distance(&w[0])).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerSeries {
    /// Network-wide broadcasts up to and including round `t` (index `t - 1`).
    pub cumulative: Vec<u64>,
    pub per_agent: Vec<u64>,
}

pub fn trigger_series(record: &RunRecord) -> TriggerSeries {
    let n = record.agents();
    let mut per_agent = vec![0u64; n];
    let mut cumulative = Vec::with_capacity(record.horizon());
    let mut total = 0u64;
    for t in 1..=record.horizon() {
        for (i, count) in per_agent.iter_mut().enumerate() {
            if record.broadcast(t, i) {
                *count += 1;
                total += 1;
            }
        }
        cumulative.push(total);
    }
    TriggerSeries { cumulative, per_agent }
}

/// One row of the running-average series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: usize,
    pub avg_cum_loss: f64,
    pub avg_cum_violation: f64,
    pub cum_triggers: u64,
    pub net_regret_dynamic: Option<f64>,
    pub net_regret_static: Option<f64>,
}

pub const SERIES_COLUMNS: [&str; 6] =
    ["t", "avg_cum_loss", "avg_cum_violation", "cum_triggers", "net_regret_dynamic", "net_regret_static"];

/// Prefix averages for every `T' <= T`. Regret columns hold the cumulative
/// regret over the prefix against the supplied comparators.
pub fn averaged_series(
    eval: &GlobalEvaluation,
    record: &RunRecord,
    dynamic: Option<&BenchmarkSequence>,
    static_bench: Option<&BenchmarkSequence>,
) -> Result<Vec<SeriesRow>> {
    for b in [dynamic, static_bench].into_iter().flatten() {
        if b.losses.len() != eval.horizon() {
            return Err(Error::LengthMismatch(format!(
                "benchmark covers {} rounds, run covers {}",
                b.losses.len(),
                eval.horizon()
            )));
        }
    }
    let triggers = trigger_series(record);
    let mut rows = Vec::with_capacity(eval.horizon());
    let (mut loss, mut viol, mut dyn_loss, mut stat_loss) = (0.0, 0.0, 0.0, 0.0);
    for t in 1..=eval.horizon() {
        let round = eval.round_loss(t);
        loss += round;
        viol += eval.round_violation(t);
        let net_regret_dynamic = dynamic.map(|b| {
            dyn_loss += b.losses[t - 1];
            loss - dyn_loss
        });
        let net_regret_static = static_bench.map(|b| {
            stat_loss += b.losses[t - 1];
            loss - stat_loss
        });
        rows.push(SeriesRow {
            t,
            avg_cum_loss: loss / t as f64,
            avg_cum_violation: viol / t as f64,
            cum_triggers: triggers.cumulative[t - 1],
            net_regret_dynamic,
            net_regret_static,
        });
    }
    Ok(rows)
}
