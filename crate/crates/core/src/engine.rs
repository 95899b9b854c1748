//! Round-synchronous execution of the event-triggered online primal-dual
//! algorithm.
//!
//! Each round `t`: agents commit `x_{i,t}`; the round's oracles are revealed
//! and losses/violations recorded; broadcasts are mixed with `W_t`; every
//! agent takes the primal-dual step with the `t + 1` parameters; and the
//! event-triggering test decides whether `x_{i,t+1}` is broadcast.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::{consensus_mix, validate_assumption2, MixingSource};
use crate::linalg::{euclid_norm, pos_part, project_box, BoxSet, DecisionVector, NonnegVector};
use crate::problem::{sample_in_box, LocalOracle, OnlineProblem};
use crate::schedules::{RoundParams, ScheduleMeta, ScheduleSet};
use crate::seeding::{self, Purpose};

/// Slack allowed on `||xhat_{i,t} - x_{i,t}|| <= tau_t`.
pub const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub x: DecisionVector,
    /// Last broadcast decision.
    pub x_hat: DecisionVector,
    pub q: NonnegVector,
    pub triggers: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitRule {
    /// `x_1 = P_X(0)`.
    Origin,
    /// Uniform in the box, agent `i` drawing from stream `(Init, 0, i)`.
    Uniform { seed: u64 },
}

/// Initial states; every agent broadcasts `x_1` (trigger count 1).
pub fn init_agents(constraint_counts: &[usize], bounds: &BoxSet, rule: InitRule) -> Result<Vec<AgentState>> {
    let p = bounds.dim();
    constraint_counts
        .iter()
        .enumerate()
        .map(|(id, &m)| {
            let x = match rule {
                InitRule::Origin => project_box(&DVector::zeros(p), bounds)?,
                InitRule::Uniform { seed } => {
                    let mut rng = seeding::stream(seed, Purpose::Init, 0, id as u64);
                    DecisionVector::from_dvector(sample_in_box(bounds, &mut rng))?
                }
            };
            Ok(AgentState {
                id,
                x_hat: x.clone(),
                x,
                q: NonnegVector::zeros(m),
                triggers: 1,
            })
        })
        .collect()
}

/// Result of one primal-dual update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub omega: DVector<f64>,
    pub x: DecisionVector,
    pub q: NonnegVector,
}

/// Primal-dual update of one agent from `x_t, q_t` with mixed broadcast `z`,
/// the round-`t` oracle, and `next` holding `alpha, beta, gamma` at `t + 1`.
///
/// ```text
/// omega  = df(x_t) + J'q_t                    J = d[g(x_t)]+ (m x p)
/// x_next = P_X(z - alpha * omega)
/// q_next = [(1 - beta*gamma) q_t + gamma ([g(x_t)]+ + J (x_next - x_t))]+
/// ```
pub fn primal_dual_step<O: LocalOracle + ?Sized>(
    state: &AgentState,
    z: &DecisionVector,
    oracle: &O,
    next: &RoundParams,
    bounds: &BoxSet,
) -> Result<StepOutcome> {
    if next.beta * next.gamma > 1.0 {
        return Err(Error::AssumptionViolated(format!(
            "gamma * beta = {} exceeds 1",
            next.beta * next.gamma
        )));
    }
    if z.dim() != state.x.dim() {
        return Err(Error::DimensionMismatch {
            context: "primal_dual_step",
            expected: state.x.dim(),
            actual: z.dim(),
        });
    }
    let x_t = state.x.as_dvector();
    let q_t = state.q.as_dvector();
    let g = oracle.constraint(x_t);
    let jac = oracle.clipped_constraint_jacobian(x_t);
    if g.len() != q_t.len() {
        return Err(Error::DimensionMismatch {
            context: "dual variable",
            expected: q_t.len(),
            actual: g.len(),
        });
    }

    let omega = oracle.loss_gradient(x_t) + jac.tr_mul(q_t);
    let x_next = project_box(&(z.as_dvector() - next.alpha * &omega), bounds)?;

    let feed = pos_part(&g).as_dvector() + &jac * (x_next.as_dvector() - x_t);
    let q_next = pos_part(&((1.0 - next.beta * next.gamma) * q_t + next.gamma * feed));
    if q_next.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dual variable"));
    }
    Ok(StepOutcome { omega, x: x_next, q: q_next })
}

/// Broadcast iff `||x_next - x_hat|| >= tau_next`.
pub fn trigger_check(x_next: &DecisionVector, x_hat: &DecisionVector, tau_next: f64) -> bool {
    x_next.distance(x_hat) >= tau_next
}

impl AgentState {
    /// Installs a step outcome; returns whether the agent broadcast.
    pub fn commit(&mut self, outcome: StepOutcome, tau_next: f64, mode: TriggerMode) -> bool {
        let fire = match mode {
            TriggerMode::EventTriggered => trigger_check(&outcome.x, &self.x_hat, tau_next),
            TriggerMode::AlwaysBroadcast => true,
        };
        if fire {
            self.x_hat = outcome.x.clone();
            self.triggers += 1;
        }
        self.x = outcome.x;
        self.q = outcome.q;
        fire
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerMode {
    EventTriggered,
    /// Broadcast every round (no event-triggering).
    AlwaysBroadcast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub init: InitRule,
    pub trigger: TriggerMode,
    pub record_decisions: bool,
    /// Also keep `xhat` and `q` of every agent and round.
    pub record_states: bool,
    /// Stored in the record for provenance.
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            init: InitRule::Origin,
            trigger: TriggerMode::EventTriggered,
            record_decisions: true,
            record_states: false,
            seed: 0,
        }
    }
}

/// Hands out round oracles only for rounds whose decisions are committed.
pub struct OracleGate<'a, P> {
    problem: &'a P,
    committed: usize,
}

impl<'a, P: OnlineProblem> OracleGate<'a, P> {
    pub fn new(problem: &'a P) -> Self {
        Self { problem, committed: 0 }
    }

    pub fn commit(&mut self, t: usize) {
        self.committed = self.committed.max(t);
    }

    pub fn reveal(&self, t: usize) -> Result<Vec<P::Oracle>> {
        if t == 0 || t > self.committed {
            return Err(Error::PhaseViolation { requested: t, committed: self.committed });
        }
        Ok(self.problem.round(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub agents: usize,
    pub dim: usize,
    pub constraint_counts: Vec<usize>,
    pub horizon: usize,
    pub seed: u64,
    pub schedule: ScheduleMeta,
    pub trigger: TriggerMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub x_hat: DecisionVector,
    pub q: NonnegVector,
    pub triggers: u64,
}

/// Everything observed during a run, indexed by round `t` (1-based) and agent.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub meta: RunMeta,
    losses: Vec<f64>,
    constraints: Vec<DVector<f64>>,
    broadcasts: Vec<bool>,
    decisions: Option<Vec<DecisionVector>>,
    states: Option<Vec<StateSnapshot>>,
    thresholds: Vec<f64>,
    /// `max_{i,t} ||xhat_{i,t} - x_{i,t}|| - tau_t`.
    pub max_gap_excess: f64,
}

impl RunRecord {
    fn idx(&self, t: usize, i: usize) -> usize {
        assert!(t >= 1 && t <= self.meta.horizon && i < self.meta.agents, "round {t}, agent {i} out of range");
        (t - 1) * self.meta.agents + i
    }

    pub fn horizon(&self) -> usize {
        self.meta.horizon
    }

    pub fn agents(&self) -> usize {
        self.meta.agents
    }

    /// `f_{i,t}(x_{i,t})`.
    pub fn loss(&self, t: usize, i: usize) -> f64 {
        self.losses[self.idx(t, i)]
    }

    /// `g_{i,t}(x_{i,t})`.
    pub fn constraint(&self, t: usize, i: usize) -> &DVector<f64> {
        &self.constraints[self.idx(t, i)]
    }

    /// Whether agent `i` broadcast `x_{i,t}` (always true at `t = 1`).
    pub fn broadcast(&self, t: usize, i: usize) -> bool {
        self.broadcasts[self.idx(t, i)]
    }

    pub fn decision(&self, t: usize, i: usize) -> Option<&DecisionVector> {
        let k = self.idx(t, i);
        self.decisions.as_ref().map(|d| &d[k])
    }

    pub fn has_decisions(&self) -> bool {
        self.decisions.is_some()
    }

    pub fn state(&self, t: usize, i: usize) -> Option<&StateSnapshot> {
        let k = self.idx(t, i);
        self.states.as_ref().map(|s| &s[k])
    }

    pub fn threshold(&self, t: usize) -> f64 {
        self.thresholds[t - 1]
    }

    pub fn total_triggers(&self) -> u64 {
        self.broadcasts.iter().filter(|b| **b).count() as u64
    }

    /// Bitwise equality of every recorded number (metadata excluded).
    pub fn same_bits(&self, other: &RunRecord) -> bool {
        fn bits(v: &[f64]) -> Vec<u64> {
            v.iter().map(|x| x.to_bits()).collect()
        }
        let dec = |r: &RunRecord| {
            r.decisions
                .as_ref()
                .map(|d| d.iter().flat_map(|x| bits(x.as_slice())).collect::<Vec<_>>())
        };
        let st = |r: &RunRecord| {
            r.states.as_ref().map(|s| {
                s.iter()
                    .flat_map(|x| {
                        let mut v = bits(x.x_hat.as_slice());
                        v.extend(bits(x.q.as_slice()));
                        v.push(x.triggers);
                        v
                    })
                    .collect::<Vec<_>>()
            })
        };
        bits(&self.losses) == bits(&other.losses)
            && self.constraints.len() == other.constraints.len()
            && self
                .constraints
                .iter()
                .zip(&other.constraints)
                .all(|(a, b)| bits(a.as_slice()) == bits(b.as_slice()))
            && self.broadcasts == other.broadcasts
            && dec(self) == dec(other)
            && st(self) == st(other)
    }
}

/// Runs `horizon` rounds. Mixing matrices and schedule values are validated
/// for every round before the first decision is made.
pub fn run<P, M>(
    problem: &P,
    mixing: &M,
    schedule: &ScheduleSet,
    bounds: &BoxSet,
    horizon: usize,
    options: &RunOptions,
) -> Result<RunRecord>
where
    P: OnlineProblem,
    M: MixingSource + ?Sized,
{
    let n = problem.agents();
    let p = problem.dim();
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon T must be positive".into()));
    }
    if bounds.dim() != p {
        return Err(Error::DimensionMismatch { context: "feasible box", expected: p, actual: bounds.dim() });
    }
    if mixing.agents() != n {
        return Err(Error::DimensionMismatch { context: "mixing agents", expected: n, actual: mixing.agents() });
    }
    for t in 1..horizon {
        let report = validate_assumption2(&mixing.mixing(t)?, mixing.w_min());
        if !report.passes() {
            return Err(Error::AssumptionViolated(format!(
                "round {t}: {}",
                report.failures().join("; ")
            )));
        }
        let next = schedule.params(t + 1);
        if next.beta * next.gamma > 1.0 {
            return Err(Error::AssumptionViolated(format!("gamma_{0} * beta_{0} > 1", t + 1)));
        }
    }

    let constraint_counts: Vec<usize> = (0..n).map(|i| problem.constraint_count(i)).collect();
    let mut agents = init_agents(&constraint_counts, bounds, options.init)?;
    let mut gate = OracleGate::new(problem);

    let cells = horizon * n;
    let mut record = RunRecord {
        meta: RunMeta {
            agents: n,
            dim: p,
            constraint_counts,
            horizon,
            seed: options.seed,
            schedule: schedule.meta().clone(),
            trigger: options.trigger,
        },
        losses: Vec::with_capacity(cells),
        constraints: Vec::with_capacity(cells),
        broadcasts: Vec::with_capacity(cells),
        decisions: options.record_decisions.then(|| Vec::with_capacity(cells)),
        states: options.record_states.then(|| Vec::with_capacity(cells)),
        thresholds: Vec::with_capacity(horizon),
        max_gap_excess: f64::NEG_INFINITY,
    };
    let mut fired = vec![true; n];

    for t in 1..=horizon {
        let tau_t = schedule.tau(t);
        record.thresholds.push(tau_t);
        for (agent, did_fire) in agents.iter().zip(&fired) {
            if let Some(d) = record.decisions.as_mut() {
                d.push(agent.x.clone());
            }
            if let Some(s) = record.states.as_mut() {
                s.push(StateSnapshot { x_hat: agent.x_hat.clone(), q: agent.q.clone(), triggers: agent.triggers });
            }
            record.broadcasts.push(*did_fire);
            let gap = euclid_norm((agent.x_hat.as_dvector() - agent.x.as_dvector()).as_slice());
            record.max_gap_excess = record.max_gap_excess.max(gap - tau_t);
        }
        gate.commit(t);

        let oracles = gate.reveal(t)?;
        for (agent, oracle) in agents.iter().zip(&oracles) {
            let x = agent.x.as_dvector();
            record.losses.push(oracle.loss(x));
            record.constraints.push(oracle.constraint(x));
        }

        if t == horizon {
            break;
        }
        let w = mixing.mixing(t)?;
        let broadcasts: Vec<DecisionVector> = agents.iter().map(|a| a.x_hat.clone()).collect();
        let mixed = consensus_mix(&w, &broadcasts)?;
        let next = schedule.params(t + 1);
        for ((agent, oracle), z) in agents.iter_mut().zip(&oracles).zip(&mixed) {
            let outcome = primal_dual_step(agent, z, oracle, &next, bounds)?;
            fired[agent.id] = agent.commit(outcome, next.tau, options.trigger);
        }
    }
    Ok(record)
}
