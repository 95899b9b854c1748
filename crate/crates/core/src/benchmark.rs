//! Offline comparators: the per-round (dynamic) and fixed (static) optimal
//! decision sequences, computed with a projected augmented-Lagrangian
//! primal-dual method.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{project_box, BoxSet, DecisionVector};
use crate::metrics::path_length;
use crate::problem::{sample_in_box, LocalOracle, OnlineProblem, QuadraticParts};
use crate::seeding::{self, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Target for the KKT residual proxy.
    pub tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Initial augmented-Lagrangian penalty.
    pub penalty: f64,
    /// Grid pitch relative to the box span, used for `p <= 2` cross-checks.
    pub grid_pitch: f64,
    /// Cross-check each solve: dense grid for `p <= 2`, otherwise a second
    /// solve from a seeded random start.
    pub cross_check: bool,
    /// Objective agreement required between the two seeded solves.
    pub agreement_tol: f64,
    /// Objective slack allowed against the grid optimum.
    pub grid_tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_outer: 100,
            max_inner: 50_000,
            penalty: 10.0,
            grid_pitch: 1e-3,
            cross_check: false,
            agreement_tol: 1e-5,
            grid_tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    Dynamic,
    Static,
    Custom,
}

/// Problems found while computing a benchmark. `round` is 0 for static solves.
#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkFlag {
    Infeasible { round: usize, violation: f64 },
    NotConverged { round: usize, residual: f64 },
    CrossCheckMismatch { round: usize, gap: f64 },
}

/// Comparator decisions `y_1..y_T` with their global losses `f_t(y_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSequence {
    pub kind: BenchmarkKind,
    pub decisions: Vec<DecisionVector>,
    pub losses: Vec<f64>,
    pub path_length: f64,
    pub flags: Vec<BenchmarkFlag>,
}

impl BenchmarkSequence {
    /// Wraps an arbitrary comparator, evaluating `f_t(y_t)` on `problem`.
    pub fn custom<P: OnlineProblem>(problem: &P, decisions: Vec<DecisionVector>) -> Result<Self> {
        let losses = decisions
            .iter()
            .enumerate()
            .map(|(k, y)| global_loss(&problem.round(k + 1), y.as_dvector()))
            .collect();
        Ok(Self {
            kind: BenchmarkKind::Custom,
            path_length: path_length(&decisions),
            decisions,
            losses,
            flags: Vec::new(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.decisions.len()
    }

    pub fn total_loss(&self) -> f64 {
        self.losses.iter().sum()
    }
}

/// `f_t(x) = (1/n) sum_j f_{j,t}(x)`.
pub fn global_loss<O: LocalOracle>(oracles: &[O], x: &DVector<f64>) -> f64 {
    oracles.iter().map(|o| o.loss(x)).sum::<f64>() / oracles.len() as f64
}

/// Smooth convex program `min F(x) s.t. g(x) <= 0, x in box`.
pub trait Program {
    fn dim(&self) -> usize;
    fn constraint_count(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn constraints(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `sum_k w_k grad g_k(x)`.
    fn constraint_vjp(&self, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64>;
}

/// `F(x) = 1/2 x'Hx - c'x + k` with affine rows `Gx <= h`.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
    rows: DMatrix<f64>,
    offsets: DVector<f64>,
}

impl QuadraticProgram {
    /// Weighted sum of objectives; constraints are stacked.
    pub fn aggregate<'a>(parts: impl IntoIterator<Item = (f64, &'a QuadraticParts)>) -> Option<Self> {
        let mut hessian: Option<DMatrix<f64>> = None;
        let mut linear: Option<DVector<f64>> = None;
        let mut constant = 0.0;
        let mut blocks: Vec<&DMatrix<f64>> = Vec::new();
        let mut offs: Vec<&DVector<f64>> = Vec::new();
        for (w, part) in parts {
            match hessian.as_mut() {
                Some(h) => *h += w * &part.hessian,
                None => hessian = Some(w * &part.hessian),
            }
            match linear.as_mut() {
                Some(c) => *c += w * &part.linear,
                None => linear = Some(w * &part.linear),
            }
            constant += w * part.constant;
            blocks.push(&part.g_matrix);
            offs.push(&part.g_offset);
        }
        let hessian = hessian?;
        let p = hessian.ncols();
        let total: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut rows = DMatrix::zeros(total, p);
        let mut offsets = DVector::zeros(total);
        let mut r = 0;
        for (b, o) in blocks.iter().zip(&offs) {
            rows.rows_mut(r, b.nrows()).copy_from(*b);
            offsets.rows_mut(r, o.len()).copy_from(*o);
            r += b.nrows();
        }
        Some(Self { hessian, linear: linear?, constant, rows, offsets })
    }

    fn subset(&self, active: &[usize]) -> QuadraticProgram {
        let p = self.hessian.ncols();
        QuadraticProgram {
            hessian: self.hessian.clone(),
            linear: self.linear.clone(),
            constant: self.constant,
            rows: DMatrix::from_fn(active.len(), p, |r, c| self.rows[(active[r], c)]),
            offsets: DVector::from_fn(active.len(), |r, _| self.offsets[active[r]]),
        }
    }
}

impl Program for QuadraticProgram {
    fn dim(&self) -> usize {
        self.hessian.ncols()
    }
    fn constraint_count(&self) -> usize {
        self.offsets.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) - self.linear.dot(x) + self.constant
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.hessian * x - &self.linear
    }
    fn constraints(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rows * x - &self.offsets
    }
    fn constraint_vjp(&self, _x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.rows.tr_mul(w)
    }
}

/// Weighted average of oracle losses with all oracle constraints stacked.
pub struct OracleProgram<'a, O> {
    oracles: Vec<&'a O>,
    weight: f64,
}

impl<'a, O: LocalOracle> OracleProgram<'a, O> {
    pub fn new(oracles: Vec<&'a O>) -> Self {
        let weight = 1.0 / oracles.len().max(1) as f64;
        Self { oracles, weight }
    }
}

impl<O: LocalOracle> Program for OracleProgram<'_, O> {
    fn dim(&self) -> usize {
        self.oracles[0].dim()
    }
    fn constraint_count(&self) -> usize {
        self.oracles.iter().map(|o| o.constraint_count()).sum()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.weight * self.oracles.iter().map(|o| o.loss(x)).sum::<f64>()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        for o in &self.oracles {
            g += o.loss_gradient(x);
        }
        g * self.weight
    }
    fn constraints(&self, x: &DVector<f64>) -> DVector<f64> {
        let parts: Vec<f64> = self.oracles.iter().flat_map(|o| o.constraint(x).iter().copied().collect::<Vec<_>>()).collect();
        DVector::from_vec(parts)
    }
    fn constraint_vjp(&self, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.len());
        let mut r = 0;
        for o in &self.oracles {
            let m = o.constraint_count();
            let wk = w.rows(r, m);
            if wk.iter().any(|v| *v != 0.0) {
                out += o.constraint_jacobian(x).tr_mul(&wk);
            }
            r += m;
        }
        out
    }
}

/// Outcome of one constrained solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: DVector<f64>,
    pub value: f64,
    pub multipliers: DVector<f64>,
    /// `max(||x - P(x - grad L)||, ||[g]+||, max_k lambda_k |g_k|)`.
    pub residual: f64,
    pub max_violation: f64,
    pub converged: bool,
}

fn projected(x: &DVector<f64>, bounds: &BoxSet) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        x.iter()
            .zip(bounds.lower().iter().zip(bounds.upper()))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi)),
    )
}

struct Penalized<'a> {
    prog: &'a dyn Program,
    lambda: &'a DVector<f64>,
    rho: f64,
}

impl Penalized<'_> {
    fn shifted(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.lambda + self.rho * self.prog.constraints(x)).map(|v| v.max(0.0))
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let s = self.shifted(x);
        self.prog.value(x) + (s.norm_squared() - self.lambda.norm_squared()) / (2.0 * self.rho)
    }

    fn value_grad(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let s = self.shifted(x);
        let v = self.prog.value(x) + (s.norm_squared() - self.lambda.norm_squared()) / (2.0 * self.rho);
        let g = self.prog.gradient(x) + self.prog.constraint_vjp(x, &s);
        (v, g)
    }
}

/// Accelerated projected gradient with backtracking and adaptive restart.
fn minimize_penalized(
    phi: &Penalized<'_>,
    bounds: &BoxSet,
    x0: DVector<f64>,
    lipschitz: &mut f64,
    tol: f64,
    max_iter: usize,
) -> DVector<f64> {
    let mut x = x0;
    let mut y = x.clone();
    let mut momentum = 1.0f64;
    let mut fx = phi.value(&x);
    for _ in 0..max_iter {
        let (fy, gy) = phi.value_grad(&y);
        let (x_new, f_new) = loop {
            let cand = projected(&(&y - &gy / *lipschitz), bounds);
            let d = &cand - &y;
            let f_cand = phi.value(&cand);
            if f_cand <= fy + gy.dot(&d) + 0.5 * *lipschitz * d.norm_squared() + 1e-14 * fy.abs().max(1.0)
                || *lipschitz > 1e16
            {
                break (cand, f_cand);
            }
            *lipschitz *= 2.0;
        };
        let step_norm = *lipschitz * (&x_new - &y).norm();
        if step_norm <= tol {
            return x_new;
        }
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        if f_new > fx {
            momentum = 1.0;
            y = x_new.clone();
        } else {
            y = &x_new + ((momentum - 1.0) / next_momentum) * (&x_new - &x);
            momentum = next_momentum;
        }
        x = x_new;
        fx = f_new;
        *lipschitz *= 0.95;
    }
    x
}

fn kkt_residual(prog: &dyn Program, bounds: &BoxSet, x: &DVector<f64>, lambda: &DVector<f64>) -> (f64, f64) {
    let g = prog.constraints(x);
    let grad = prog.gradient(x) + prog.constraint_vjp(x, lambda);
    let stationarity = (x - projected(&(x - &grad), bounds)).norm();
    let violation = g.map(|v| v.max(0.0)).norm();
    let complementarity = lambda
        .iter()
        .zip(g.iter())
        .map(|(l, gk)| (l * gk).abs())
        .fold(0.0, f64::max);
    (stationarity.max(violation).max(complementarity), violation)
}

/// Method of multipliers on `prog` starting at `x0` (projected) and `lambda0`.
pub fn solve_program(
    prog: &dyn Program,
    bounds: &BoxSet,
    x0: &DVector<f64>,
    lambda0: Option<DVector<f64>>,
    opts: &SolverOptions,
) -> Solution {
    let m = prog.constraint_count();
    let mut x = projected(x0, bounds);
    let mut lambda = lambda0.filter(|l| l.len() == m).unwrap_or_else(|| DVector::zeros(m));
    let mut rho = opts.penalty;
    let mut lipschitz = 1.0;
    let mut last_violation = f64::INFINITY;
    let inner_tol = (opts.tolerance * 0.1).max(1e-13);
    let mut best: Option<Solution> = None;
    for _ in 0..opts.max_outer.max(1) {
        let phi = Penalized { prog, lambda: &lambda, rho };
        x = minimize_penalized(&phi, bounds, x, &mut lipschitz, inner_tol, opts.max_inner);
        let shifted = phi.shifted(&x);
        lambda = shifted;
        let (residual, violation) = kkt_residual(prog, bounds, &x, &lambda);
        let sol = Solution {
            value: prog.value(&x),
            x: x.clone(),
            multipliers: lambda.clone(),
            residual,
            max_violation: violation,
            converged: residual <= opts.tolerance,
        };
        if sol.converged {
            return sol;
        }
        if best.as_ref().is_none_or(|b| sol.residual < b.residual) {
            best = Some(sol);
        }
        if violation > 0.25 * last_violation && rho < 1e8 {
            rho *= 10.0;
            lipschitz *= 10.0;
        }
        last_violation = violation;
    }
    best.expect("at least one outer iteration")
}

/// Equality-constrained solve on the active set guessed from `guess`.
/// Returns `None` when the guess does not satisfy the KKT conditions.
fn polish_active_set(qp: &QuadraticProgram, bounds: &BoxSet, guess: &Solution, tol: f64) -> Option<Solution> {
    let p = qp.dim();
    let g = qp.constraints(&guess.x);
    let grad = qp.gradient(&guess.x) + qp.constraint_vjp(&guess.x, &guess.multipliers);
    let scale = 1e-6f64.max(tol * 10.0);
    let rows: Vec<usize> = (0..g.len())
        .filter(|&k| guess.multipliers[k] > scale || g[k] > -scale)
        .collect();
    let mut fixed = vec![None; p];
    for j in 0..p {
        let (lo, hi, xj) = (bounds.lower()[j], bounds.upper()[j], guess.x[j]);
        if xj - lo <= scale && grad[j] > 0.0 {
            fixed[j] = Some(lo);
        } else if hi - xj <= scale && grad[j] < 0.0 {
            fixed[j] = Some(hi);
        }
    }
    let free: Vec<usize> = (0..p).filter(|&j| fixed[j].is_none()).collect();
    let (nf, na) = (free.len(), rows.len());
    let mut x = DVector::from_fn(p, |j, _| fixed[j].unwrap_or(0.0));
    let mut lambda = DVector::zeros(g.len());
    if nf + na > 0 {
        let mut kkt = DMatrix::zeros(nf + na, nf + na);
        let mut rhs = DVector::zeros(nf + na);
        for (a, &i) in free.iter().enumerate() {
            rhs[a] = qp.linear[i];
            for (j, v) in fixed.iter().enumerate() {
                if let Some(v) = v {
                    rhs[a] -= qp.hessian[(i, j)] * v;
                }
            }
            for (b, &j) in free.iter().enumerate() {
                kkt[(a, b)] = qp.hessian[(i, j)];
            }
            for (r, &k) in rows.iter().enumerate() {
                kkt[(a, nf + r)] = qp.rows[(k, i)];
                kkt[(nf + r, a)] = qp.rows[(k, i)];
            }
        }
        for (r, &k) in rows.iter().enumerate() {
            rhs[nf + r] = qp.offsets[k];
            for (j, v) in fixed.iter().enumerate() {
                if let Some(v) = v {
                    rhs[nf + r] -= qp.rows[(k, j)] * v;
                }
            }
        }
        let z = kkt.lu().solve(&rhs)?;
        if z.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for (a, &i) in free.iter().enumerate() {
            x[i] = z[a];
        }
        for (r, &k) in rows.iter().enumerate() {
            lambda[k] = z[nf + r];
        }
    }
    if lambda.iter().any(|&l| l < 0.0) || (0..p).any(|j| x[j] < bounds.lower()[j] || x[j] > bounds.upper()[j]) {
        return None;
    }
    let (residual, violation) = kkt_residual(qp, bounds, &x, &lambda);
    (residual <= tol).then(|| Solution {
        value: qp.value(&x),
        x,
        multipliers: lambda,
        residual,
        max_violation: violation,
        converged: true,
    })
}

/// Loose augmented-Lagrangian solve followed by an active-set polish; falls
/// back to the full-tolerance solve when the polish is rejected.
fn solve_subproblem(
    qp: &QuadraticProgram,
    bounds: &BoxSet,
    x0: &DVector<f64>,
    lambda0: Option<DVector<f64>>,
    opts: &SolverOptions,
) -> Solution {
    let loose = SolverOptions { tolerance: opts.tolerance.max(1e-4), ..opts.clone() };
    let rough = solve_program(qp, bounds, x0, lambda0, &loose);
    if let Some(sol) = polish_active_set(qp, bounds, &rough, opts.tolerance) {
        return sol;
    }
    if rough.converged && loose.tolerance <= opts.tolerance {
        return rough;
    }
    solve_program(qp, bounds, &rough.x, Some(rough.multipliers), opts)
}

/// Solves a quadratic program with many rows by adding violated rows to a
/// working set until every row holds.
pub fn solve_quadratic(qp: &QuadraticProgram, bounds: &BoxSet, x0: &DVector<f64>, opts: &SolverOptions) -> Solution {
    let total = qp.constraint_count();
    let feas_tol = opts.tolerance * 0.1;
    let batch = 16.max(qp.dim() * 2);
    let mut active: Vec<usize> = Vec::new();
    let mut in_set = vec![false; total];
    let mut x = projected(x0, bounds);
    let mut lambda: Option<DVector<f64>> = None;
    loop {
        let sub = qp.subset(&active);
        let sol = solve_subproblem(&sub, bounds, &x, lambda.take(), opts);
        x = sol.x.clone();
        let g = qp.constraints(&x);
        let mut violated: Vec<(usize, f64)> = g
            .iter()
            .enumerate()
            .filter(|(k, v)| !in_set[*k] && **v > feas_tol)
            .map(|(k, v)| (k, *v))
            .collect();
        if violated.is_empty() {
            let mut full_lambda = DVector::zeros(total);
            for (r, &k) in active.iter().enumerate() {
                full_lambda[k] = sol.multipliers[r];
            }
            let (residual, violation) = kkt_residual(qp, bounds, &x, &full_lambda);
            return Solution {
                value: qp.value(&x),
                x,
                multipliers: full_lambda,
                residual,
                max_violation: violation,
                converged: residual <= opts.tolerance,
            };
        }
        violated.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut next_lambda: Vec<f64> = sol.multipliers.iter().copied().collect();
        for (k, _) in violated.into_iter().take(batch) {
            in_set[k] = true;
            active.push(k);
            next_lambda.push(0.0);
        }
        lambda = Some(DVector::from_vec(next_lambda));
    }
}

/// Exhaustive search over a grid of pitch `pitch_rel * span` for `p <= 2`,
/// keeping points with every constraint `<= feas_tol`.
pub fn grid_minimize(prog: &dyn Program, bounds: &BoxSet, pitch_rel: f64, feas_tol: f64) -> Result<Option<(DVector<f64>, f64)>> {
    let p = bounds.dim();
    if p == 0 || p > 2 {
        return Err(Error::InvalidParameter(format!("grid search needs p <= 2, got {p}")));
    }
    let axes: Vec<Vec<f64>> = (0..p)
        .map(|k| {
            let (lo, hi) = (bounds.lower()[k], bounds.upper()[k]);
            let steps = (1.0 / pitch_rel).round().max(1.0) as usize;
            (0..=steps).map(|s| lo + (hi - lo) * s as f64 / steps as f64).collect()
        })
        .collect();
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut visit = |x: DVector<f64>| {
        if prog.constraints(&x).iter().all(|v| *v <= feas_tol) {
            let v = prog.value(&x);
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((x, v));
            }
        }
    };
    if p == 1 {
        for a in &axes[0] {
            visit(DVector::from_element(1, *a));
        }
    } else {
        for a in &axes[0] {
            for b in &axes[1] {
                visit(DVector::from_column_slice(&[*a, *b]));
            }
        }
    }
    Ok(best)
}

fn round_program<O: LocalOracle>(oracles: &[O]) -> Option<QuadraticProgram> {
    let n = oracles.len() as f64;
    let parts: Option<Vec<QuadraticParts>> = oracles.iter().map(|o| o.quadratic()).collect();
    let parts = parts?;
    QuadraticProgram::aggregate(parts.iter().map(|p| (1.0 / n, p)))
}

fn solve_any(
    quadratic: Option<&QuadraticProgram>,
    generic: &dyn Program,
    bounds: &BoxSet,
    x0: &DVector<f64>,
    opts: &SolverOptions,
) -> Solution {
    match quadratic {
        Some(qp) => solve_quadratic(qp, bounds, x0, opts),
        None => solve_program(generic, bounds, x0, None, opts),
    }
}

/// Solves, flags, and cross-checks one program.
fn solve_checked(
    quadratic: Option<&QuadraticProgram>,
    generic: &dyn Program,
    bounds: &BoxSet,
    opts: &SolverOptions,
    round: usize,
    flags: &mut Vec<BenchmarkFlag>,
) -> Result<DecisionVector> {
    let origin = DVector::zeros(bounds.dim());
    let sol = solve_any(quadratic, generic, bounds, &origin, opts);
    if sol.max_violation > opts.tolerance {
        flags.push(BenchmarkFlag::Infeasible { round, violation: sol.max_violation });
    } else if !sol.converged {
        flags.push(BenchmarkFlag::NotConverged { round, residual: sol.residual });
    }
    if opts.cross_check {
        let prog: &dyn Program = match quadratic {
            Some(qp) => qp,
            None => generic,
        };
        if bounds.dim() <= 2 {
            if let Some((_, grid_best)) = grid_minimize(prog, bounds, opts.grid_pitch, 0.0)? {
                let gap = sol.value - grid_best;
                if gap > opts.grid_tol {
                    flags.push(BenchmarkFlag::CrossCheckMismatch { round, gap });
                }
            }
        } else {
            let mut rng = seeding::stream(opts.seed, Purpose::Solver, round as u64, 0);
            let start = sample_in_box(bounds, &mut rng);
            let other = solve_any(quadratic, generic, bounds, &start, opts);
            let gap = (other.value - sol.value).abs();
            if gap > opts.agreement_tol {
                flags.push(BenchmarkFlag::CrossCheckMismatch { round, gap });
            }
        }
    }
    project_box(&sol.x, bounds)
}

/// Per-round minimizers of `f_t` over `{x in X : g_t(x) <= 0}`.
pub fn solve_dynamic_benchmark<P: OnlineProblem>(
    problem: &P,
    bounds: &BoxSet,
    horizon: usize,
    opts: &SolverOptions,
) -> Result<BenchmarkSequence> {
    if bounds.dim() != problem.dim() {
        return Err(Error::DimensionMismatch { context: "benchmark box", expected: problem.dim(), actual: bounds.dim() });
    }
    let mut flags = Vec::new();
    let mut decisions = Vec::with_capacity(horizon);
    let mut losses = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let oracles = problem.round(t);
        let qp = round_program(&oracles);
        let generic = OracleProgram::new(oracles.iter().collect());
        let y = solve_checked(qp.as_ref(), &generic, bounds, opts, t, &mut flags)?;
        losses.push(global_loss(&oracles, y.as_dvector()));
        decisions.push(y);
    }
    Ok(BenchmarkSequence {
        kind: BenchmarkKind::Dynamic,
        path_length: path_length(&decisions),
        decisions,
        losses,
        flags,
    })
}

/// One `x` minimizing `sum_t f_t(x)` subject to every round's constraints,
/// repeated `horizon` times.
pub fn solve_static_benchmark<P: OnlineProblem>(
    problem: &P,
    bounds: &BoxSet,
    horizon: usize,
    opts: &SolverOptions,
) -> Result<BenchmarkSequence> {
    if bounds.dim() != problem.dim() {
        return Err(Error::DimensionMismatch { context: "benchmark box", expected: problem.dim(), actual: bounds.dim() });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon T must be positive".into()));
    }
    let rounds: Vec<Vec<P::Oracle>> = (1..=horizon).map(|t| problem.round(t)).collect();
    let weight = 1.0 / (horizon * problem.agents()) as f64;
    let parts: Option<Vec<QuadraticParts>> = rounds.iter().flatten().map(|o| o.quadratic()).collect();
    let qp = parts.and_then(|ps| QuadraticProgram::aggregate(ps.iter().map(|p| (weight, p))));
    let generic = OracleProgram::new(rounds.iter().flatten().collect());
    let mut flags = Vec::new();
    let y = solve_checked(qp.as_ref(), &generic, bounds, opts, 0, &mut flags)?;
    let losses = rounds.iter().map(|o| global_loss(o, y.as_dvector())).collect();
    Ok(BenchmarkSequence {
        kind: BenchmarkKind::Static,
        decisions: vec![y; horizon],
        losses,
        path_length: 0.0,
        flags,
    })
}
