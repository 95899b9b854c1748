//! Per-round local loss/constraint oracles and the online linear-regression
//! instance generator.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::BoxSet;
use crate::seeding::{self, Purpose};

/// A convex local loss `f_{i,t}` and constraint map `g_{i,t}` revealed to one
/// agent after it commits its round-`t` decision.
///
/// Inputs must have length [`LocalOracle::dim`]; implementations may panic
/// otherwise.
pub trait LocalOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn constraint_count(&self) -> usize;
    fn loss(&self, x: &DVector<f64>) -> f64;
    fn loss_gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn constraint(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Row `j` is a subgradient of `g_j` at `x` (shape `m x p`).
    fn constraint_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Subgradient of `[g(x)]+`, row-wise: row `j` of the Jacobian where
    /// `g_j(x) > 0`, the zero row where `g_j(x) <= 0`.
    fn clipped_constraint_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let g = self.constraint(x);
        let mut jac = self.constraint_jacobian(x);
        for (j, gj) in g.iter().enumerate() {
            if *gj <= 0.0 {
                jac.row_mut(j).fill(0.0);
            }
        }
        jac
    }

    /// Closed form when the loss is quadratic and the constraints affine.
    fn quadratic(&self) -> Option<QuadraticParts> {
        None
    }
}

/// `f(x) = 1/2 x'Hx - c'x + k`, `g(x) = Gx - h`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticParts {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
    pub g_matrix: DMatrix<f64>,
    pub g_offset: DVector<f64>,
}

/// A sequence of rounds, each revealing one oracle per agent.
pub trait OnlineProblem: Send + Sync {
    type Oracle: LocalOracle;

    fn agents(&self) -> usize;
    fn dim(&self) -> usize;
    fn constraint_count(&self, agent: usize) -> usize;
    /// Oracles of round `t` (1-based), one per agent.
    fn round(&self, t: usize) -> Vec<Self::Oracle>;
}

/// Local data of one agent in one round of the regression instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionAgentData {
    /// `A`, `q x p`.
    pub features: DMatrix<f64>,
    /// `vartheta = A 1 + zeta`.
    pub targets: DVector<f64>,
    /// `B`, `m x p`.
    pub constraint_matrix: DMatrix<f64>,
    /// `b`.
    pub constraint_offset: DVector<f64>,
}

pub type RegressionRoundData = Vec<RegressionAgentData>;

fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, actual })
    }
}

impl RegressionAgentData {
    pub fn new(
        features: DMatrix<f64>,
        targets: DVector<f64>,
        constraint_matrix: DMatrix<f64>,
        constraint_offset: DVector<f64>,
    ) -> Result<Self> {
        check_dim("regression targets", features.nrows(), targets.len())?;
        check_dim("constraint matrix columns", features.ncols(), constraint_matrix.ncols())?;
        check_dim("constraint offset", constraint_matrix.nrows(), constraint_offset.len())?;
        Ok(Self { features, targets, constraint_matrix, constraint_offset })
    }
}

/// `1/2 ||Ax - vartheta||^2` and its gradient `A'(Ax - vartheta)`.
pub fn eval_quadratic_loss(data: &RegressionAgentData, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    check_dim("quadratic loss", data.features.ncols(), x.len())?;
    let residual = &data.features * x - &data.targets;
    let grad = data.features.tr_mul(&residual);
    Ok((0.5 * residual.norm_squared(), grad))
}

/// `g(x) = Bx - b` and the clipped subgradient matrix of `[g(x)]+`.
pub fn eval_affine_constraint(data: &RegressionAgentData, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_dim("affine constraint", data.constraint_matrix.ncols(), x.len())?;
    let g = &data.constraint_matrix * x - &data.constraint_offset;
    let mut jac = data.constraint_matrix.clone();
    for (j, gj) in g.iter().enumerate() {
        if *gj <= 0.0 {
            jac.row_mut(j).fill(0.0);
        }
    }
    Ok((g, jac))
}

impl LocalOracle for RegressionAgentData {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn constraint_count(&self) -> usize {
        self.constraint_offset.len()
    }

    fn loss(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.features * x - &self.targets).norm_squared()
    }

    fn loss_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.features.tr_mul(&(&self.features * x - &self.targets))
    }

    fn constraint(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.constraint_matrix * x - &self.constraint_offset
    }

    fn constraint_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.constraint_matrix.clone()
    }

    fn quadratic(&self) -> Option<QuadraticParts> {
        Some(QuadraticParts {
            hessian: self.features.tr_mul(&self.features),
            linear: self.features.tr_mul(&self.targets),
            constant: 0.5 * self.targets.norm_squared(),
            g_matrix: self.constraint_matrix.clone(),
            g_offset: self.constraint_offset.clone(),
        })
    }
}

/// Sizes of the regression instance: `n` agents, decisions in R^p, `q_i`
/// regression rows and `m_i` constraints per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinRegDims {
    pub n: usize,
    pub p: usize,
    pub q: Vec<usize>,
    pub m: Vec<usize>,
}

impl LinRegDims {
    pub fn uniform(n: usize, p: usize, q: usize, m: usize) -> Result<Self> {
        Self::new(n, p, vec![q; n], vec![m; n])
    }

    pub fn new(n: usize, p: usize, q: Vec<usize>, m: Vec<usize>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidParameter("n and p must be positive".into()));
        }
        check_dim("q_i per agent", n, q.len())?;
        check_dim("m_i per agent", n, m.len())?;
        if q.iter().chain(&m).any(|d| *d == 0) {
            return Err(Error::InvalidParameter("q_i and m_i must be positive".into()));
        }
        Ok(Self { n, p, q, m })
    }
}

/// Draws round `t`: `A ~ U[-1,1]`, `vartheta = A 1 + N(0, I)`, `B ~ U[0,2]`,
/// `b ~ U[0,1]`, entrywise. Agent `i` uses its own stream `(Data, t, i)`.
pub fn gen_regression_round(dims: &LinRegDims, t: usize, seed: u64) -> RegressionRoundData {
    (0..dims.n).map(|i| gen_regression_agent(dims, t, i, seed)).collect()
}

fn gen_regression_agent(dims: &LinRegDims, t: usize, i: usize, seed: u64) -> RegressionAgentData {
    let mut rng = seeding::stream(seed, Purpose::Data, t as u64, i as u64);
    let (p, q, m) = (dims.p, dims.q[i], dims.m[i]);
    let sym = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    let two = Uniform::new_inclusive(0.0, 2.0).expect("valid range");
    let unit = Uniform::new_inclusive(0.0, 1.0).expect("valid range");
    let features = DMatrix::from_row_iterator(q, p, (0..q * p).map(|_| sym.sample(&mut rng)));
    let noise = DVector::from_iterator(q, (0..q).map(|_| StandardNormal.sample(&mut rng)));
    let targets = features.column_sum() + noise;
    let constraint_matrix = DMatrix::from_row_iterator(m, p, (0..m * p).map(|_| two.sample(&mut rng)));
    let constraint_offset = DVector::from_iterator(m, (0..m).map(|_| unit.sample(&mut rng)));
    RegressionAgentData { features, targets, constraint_matrix, constraint_offset }
}

/// The generated regression problem; rounds are regenerated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct LinRegProblem {
    pub dims: LinRegDims,
    pub seed: u64,
}

impl LinRegProblem {
    pub fn new(dims: LinRegDims, seed: u64) -> Self {
        Self { dims, seed }
    }

    /// SHA-256 over the little-endian bytes of every round's data up to `horizon`.
    pub fn fingerprint(&self, horizon: usize) -> String {
        let mut hasher = Sha256::new();
        for t in 1..=horizon {
            for agent in self.round(t) {
                for block in [
                    agent.features.as_slice(),
                    agent.targets.as_slice(),
                    agent.constraint_matrix.as_slice(),
                    agent.constraint_offset.as_slice(),
                ] {
                    for v in block {
                        hasher.update(v.to_le_bytes());
                    }
                }
            }
        }
        hex::encode(hasher.finalize())
    }
}

impl OnlineProblem for LinRegProblem {
    type Oracle = RegressionAgentData;

    fn agents(&self) -> usize {
        self.dims.n
    }

    fn dim(&self) -> usize {
        self.dims.p
    }

    fn constraint_count(&self, agent: usize) -> usize {
        self.dims.m[agent]
    }

    fn round(&self, t: usize) -> Vec<RegressionAgentData> {
        gen_regression_round(&self.dims, t, self.seed)
    }
}

/// Explicitly listed rounds, cycled when `t` exceeds the table.
#[derive(Debug, Clone)]
pub struct TabulatedProblem<O> {
    dim: usize,
    rounds: Vec<Vec<O>>,
}

impl<O: LocalOracle + Clone> TabulatedProblem<O> {
    pub fn new(rounds: Vec<Vec<O>>) -> Result<Self> {
        let first = rounds
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::InvalidParameter("empty problem table".into()))?;
        let (n, dim) = (rounds[0].len(), first.dim());
        for round in &rounds {
            check_dim("agents per round", n, round.len())?;
            for (i, o) in round.iter().enumerate() {
                check_dim("oracle dimension", dim, o.dim())?;
                check_dim("constraints per agent", rounds[0][i].constraint_count(), o.constraint_count())?;
            }
        }
        Ok(Self { dim, rounds })
    }
}

impl<O: LocalOracle + Clone> OnlineProblem for TabulatedProblem<O> {
    type Oracle = O;

    fn agents(&self) -> usize {
        self.rounds[0].len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn constraint_count(&self, agent: usize) -> usize {
        self.rounds[0][agent].constraint_count()
    }

    fn round(&self, t: usize) -> Vec<O> {
        self.rounds[(t.max(1) - 1) % self.rounds.len()].clone()
    }
}

/// Empirical stand-ins for the Lipschitz-type constants of Assumption 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEstimate {
    /// max of `|f(x) - f(y)|` and `||g(x)||` over sampled points.
    pub f1: f64,
    /// max of `||grad f(x)||` and the Frobenius norm of the constraint Jacobian.
    pub f2: f64,
}

pub fn estimate_bounds<P: OnlineProblem>(
    problem: &P,
    bounds: &BoxSet,
    rounds: usize,
    samples: usize,
    seed: u64,
) -> BoundEstimate {
    let mut rng = seeding::stream(seed, Purpose::Sampling, 0, 1);
    let mut est = BoundEstimate { f1: 0.0, f2: 0.0 };
    for t in 1..=rounds {
        let oracles = problem.round(t);
        let points: Vec<DVector<f64>> = (0..samples.max(2))
            .map(|_| sample_in_box(bounds, &mut rng))
            .collect();
        for o in &oracles {
            let losses: Vec<f64> = points.iter().map(|x| o.loss(x)).collect();
            let (lo, hi) = losses
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            est.f1 = est.f1.max(hi - lo);
            for x in &points {
                est.f1 = est.f1.max(o.constraint(x).norm());
                est.f2 = est.f2.max(o.loss_gradient(x).norm());
                est.f2 = est.f2.max(o.constraint_jacobian(x).norm());
            }
        }
    }
    est
}

pub fn sample_in_box<R: Rng>(bounds: &BoxSet, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(
        bounds.dim(),
        bounds
            .lower()
            .iter()
            .zip(bounds.upper())
            .map(|(lo, hi)| if lo < hi { rng.random_range(*lo..=*hi) } else { *lo }),
    )
}

/// Largest absolute gap between the analytic loss gradient and central
/// finite differences with step `h`.
pub fn gradient_fd_gap<O: LocalOracle>(oracle: &O, x: &DVector<f64>, h: f64) -> f64 {
    let grad = oracle.loss_gradient(x);
    (0..x.len())
        .map(|k| {
            let mut fwd = x.clone();
            let mut bwd = x.clone();
            fwd[k] += h;
            bwd[k] -= h;
            let fd = (oracle.loss(&fwd) - oracle.loss(&bwd)) / (2.0 * h);
            (fd - grad[k]).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(a: &[f64], rows: usize, target: &[f64], b: &[f64], off: &[f64]) -> RegressionAgentData {
        let p = a.len() / rows;
        RegressionAgentData::new(
            DMatrix::from_row_slice(rows, p, a),
            DVector::from_column_slice(target),
            DMatrix::from_row_slice(off.len(), p, b),
            DVector::from_column_slice(off),
        )
        .unwrap()
    }

    #[test]
    fn identity_loss_example() {
        let d = data(&[1.0, 0.0, 0.0, 1.0], 2, &[0.0, 0.0], &[1.0, 0.0], &[0.0]);
        let (v, g) = eval_quadratic_loss(&d, &DVector::from_column_slice(&[1.0, 1.0])).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(g.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn exact_fit_has_zero_loss() {
        let d = data(&[2.0, 1.0, 0.0, 3.0], 2, &[4.0, 3.0], &[1.0, 0.0], &[0.0]);
        let (v, g) = eval_quadratic_loss(&d, &DVector::from_column_slice(&[1.5, 1.0])).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn affine_constraint_clipping() {
        let d = data(&[1.0, 0.0], 1, &[0.0], &[1.0, 0.0], &[0.0]);
        let (g, j) = eval_affine_constraint(&d, &DVector::from_column_slice(&[2.0, 0.0])).unwrap();
        assert_eq!(g.as_slice(), &[2.0]);
        assert_eq!(j.as_slice(), &[1.0, 0.0]);
        let (g, j) = eval_affine_constraint(&d, &DVector::from_column_slice(&[-2.0, 0.0])).unwrap();
        assert_eq!(g.as_slice(), &[-2.0]);
        assert_eq!(j.as_slice(), &[0.0, 0.0]);
        let (g, j) = eval_affine_constraint(&d, &DVector::from_column_slice(&[0.0, 5.0])).unwrap();
        assert_eq!(g.as_slice(), &[0.0]);
        assert_eq!(j.as_slice(), &[0.0, 0.0]);
        // trait default agrees with the closed form
        let x = DVector::from_column_slice(&[0.0, 5.0]);
        assert_eq!(d.clipped_constraint_jacobian(&x), j);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let d = data(&[1.0, 0.0], 1, &[0.0], &[1.0, 0.0], &[0.0]);
        let x = DVector::from_column_slice(&[1.0]);
        assert!(eval_quadratic_loss(&d, &x).is_err());
        assert!(eval_affine_constraint(&d, &x).is_err());
    }

    #[test]
    fn generator_is_deterministic_and_in_support() {
        let dims = LinRegDims::uniform(5, 10, 4, 2).unwrap();
        let a = gen_regression_round(&dims, 3, 42);
        assert_eq!(a, gen_regression_round(&dims, 3, 42));
        assert_ne!(a, gen_regression_round(&dims, 4, 42));
        for agent in &a {
            assert!(agent.features.iter().all(|v| (-1.0..=1.0).contains(v)));
            assert!(agent.constraint_matrix.iter().all(|v| (0.0..=2.0).contains(v)));
            assert!(agent.constraint_offset.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(agent.features.shape(), (4, 10));
            assert_eq!(agent.constraint_matrix.shape(), (2, 10));
        }
    }

    #[test]
    fn quadratic_parts_reproduce_the_loss() {
        let dims = LinRegDims::uniform(1, 3, 4, 2).unwrap();
        let d = &gen_regression_round(&dims, 1, 9)[0];
        let qp = d.quadratic().unwrap();
        let x = DVector::from_column_slice(&[0.3, -1.0, 2.0]);
        let via_parts = 0.5 * x.dot(&(&qp.hessian * &x)) - qp.linear.dot(&x) + qp.constant;
        assert!((via_parts - d.loss(&x)).abs() < 1e-12);
    }

    #[test]
    fn fingerprint_depends_on_seed_only_through_data() {
        let dims = LinRegDims::uniform(3, 2, 2, 1).unwrap();
        let a = LinRegProblem::new(dims.clone(), 1).fingerprint(5);
        assert_eq!(a, LinRegProblem::new(dims.clone(), 1).fingerprint(5));
        assert_ne!(a, LinRegProblem::new(dims, 2).fingerprint(5));
    }

    #[test]
    fn bound_estimates_are_positive() {
        let problem = LinRegProblem::new(LinRegDims::uniform(3, 4, 4, 2).unwrap(), 5);
        let bounds = BoxSet::cube(4, -5.0, 5.0).unwrap();
        let est = estimate_bounds(&problem, &bounds, 3, 8, 1);
        assert!(est.f1 > 0.0 && est.f2 > 0.0);
    }

    #[test]
    fn tabulated_problem_cycles() {
        let d0 = data(&[1.0], 1, &[0.0], &[1.0], &[0.0]);
        let d1 = data(&[2.0], 1, &[0.0], &[1.0], &[0.0]);
        let table = TabulatedProblem::new(vec![vec![d0.clone()], vec![d1.clone()]]).unwrap();
        assert_eq!(table.round(1), vec![d0.clone()]);
        assert_eq!(table.round(2), vec![d1]);
        assert_eq!(table.round(3), vec![d0]);
    }
}
