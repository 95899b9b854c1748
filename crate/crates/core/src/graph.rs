//! Time-varying communication topology, doubly stochastic mixing matrices
//! and the consensus mixing step.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::DecisionVector;
use crate::seeding::{self, Purpose};

/// Tolerance on row and column sums used by [`validate_assumption2`].
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Unordered pairs `(i, j)` with `i < j`; each stands for both arcs.
    Undirected,
    /// Arcs `(j, i)`: agent `i` receives from agent `j`.
    Directed,
}

/// Edge set of one round over agents `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    n: usize,
    kind: EdgeKind,
    pairs: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(n: usize, kind: EdgeKind) -> Self {
        Self { n, kind, pairs: BTreeSet::new() }
    }

    pub fn insert(&mut self, a: usize, b: usize) -> Result<()> {
        if a >= self.n || b >= self.n {
            return Err(Error::InvalidParameter(format!(
                "edge ({a}, {b}) out of range for {} agents",
                self.n
            )));
        }
        if a == b {
            return Ok(());
        }
        let key = match self.kind {
            EdgeKind::Undirected => (a.min(b), a.max(b)),
            EdgeKind::Directed => (a, b),
        };
        self.pairs.insert(key);
        Ok(())
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> EdgeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Stored pairs (unordered for undirected sets, `(from, to)` otherwise).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        match self.kind {
            EdgeKind::Undirected => self.pairs.contains(&(a.min(b), a.max(b))),
            EdgeKind::Directed => self.pairs.contains(&(a, b)),
        }
    }

    /// Directed arcs `(from, to)`, undirected pairs expanded both ways.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        match self.kind {
            EdgeKind::Directed => self.pairs.iter().copied().collect(),
            EdgeKind::Undirected => self
                .pairs
                .iter()
                .flat_map(|&(a, b)| [(a, b), (b, a)])
                .collect(),
        }
    }
}

/// Row-indexed weights `W[i][j]`: agent `i` weights the broadcast of agent `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    weights: DMatrix<f64>,
}

impl MixingMatrix {
    /// Wraps user-supplied weights. Only the shape is checked here; use
    /// [`validate_assumption2`] before feeding the matrix to the engine.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::MixingConstruction("empty matrix".into()));
        }
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "mixing matrix row",
                    expected: n,
                    actual: row.len(),
                });
            }
            if row.iter().any(|w| !w.is_finite()) {
                return Err(Error::NonFinite("mixing matrix"));
            }
        }
        Ok(Self {
            weights: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self { weights: DMatrix::identity(n, n) }
    }

    pub fn agents(&self) -> usize {
        self.weights.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }
}

/// The random-graph family: each unordered pair is linked with probability
/// `p_edge` per round, and the path edges `(i, i + 1)` are always present.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSchedule {
    pub n: usize,
    pub p_edge: f64,
    pub seed: u64,
    /// Joint-connectivity window B. Recorded; the path edges give B = 1.
    pub window: usize,
}

impl GraphSchedule {
    pub fn new(n: usize, p_edge: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("graph needs n >= 2, got {n}")));
        }
        if !(0.0..=1.0).contains(&p_edge) {
            return Err(Error::InvalidParameter(format!("p_edge {p_edge} outside [0, 1]")));
        }
        Ok(Self { n, p_edge, seed, window: 1 })
    }
}

/// Draws the undirected edge set of round `t`. Deterministic in `(seed, t)`.
pub fn gen_round_graph(schedule: &GraphSchedule, t: usize) -> EdgeSet {
    let n = schedule.n;
    let mut rng = seeding::stream(schedule.seed, Purpose::Graph, t as u64, 0);
    let mut edges = EdgeSet::new(n, EdgeKind::Undirected);
    for a in 0..n {
        for b in (a + 1)..n {
            // one draw per pair keeps the stream layout independent of p_edge
            let u: f64 = rng.random();
            if u < schedule.p_edge || b == a + 1 {
                edges.pairs.insert((a, b));
            }
        }
    }
    edges
}

/// Weight `1/n` on every received arc, diagonal filled to make rows sum to one.
pub fn build_mixing_matrix(edges: &EdgeSet) -> Result<MixingMatrix> {
    let n = edges.agents();
    let w = 1.0 / n as f64;
    let mut weights = DMatrix::zeros(n, n);
    for (from, to) in edges.arcs() {
        weights[(to, from)] = w;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| weights[(i, j)]).sum();
        let diag = 1.0 - off;
        if diag <= 0.0 {
            return Err(Error::MixingConstruction(format!(
                "agent {i} has nonpositive self-weight {diag}"
            )));
        }
        weights[(i, i)] = diag;
    }
    Ok(MixingMatrix { weights })
}

/// Outcome of the Assumption 2 (i)-(ii) checks on one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingReport {
    pub max_row_deviation: f64,
    pub max_col_deviation: f64,
    /// Smallest strictly positive entry (`f64::INFINITY` if none).
    pub min_positive: f64,
    pub diagonal_positive: bool,
    pub nonnegative: bool,
    pub w_min: f64,
}

impl MixingReport {
    pub fn doubly_stochastic(&self) -> bool {
        self.nonnegative
            && self.max_row_deviation < STOCHASTIC_TOL
            && self.max_col_deviation < STOCHASTIC_TOL
    }

    pub fn weights_bounded_below(&self) -> bool {
        self.diagonal_positive && self.min_positive >= self.w_min - STOCHASTIC_TOL
    }

    pub fn passes(&self) -> bool {
        self.doubly_stochastic() && self.weights_bounded_below()
    }

    /// Names of the failed sub-assumptions.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.weights_bounded_below() {
            out.push(format!(
                "Assumption 2(i): positive weights must be >= {} (min positive {}, diagonal positive: {})",
                self.w_min, self.min_positive, self.diagonal_positive
            ));
        }
        if !self.doubly_stochastic() {
            out.push(format!(
                "Assumption 2(ii): not doubly stochastic (row dev {:e}, col dev {:e}, nonnegative: {})",
                self.max_row_deviation, self.max_col_deviation, self.nonnegative
            ));
        }
        out
    }
}

pub fn validate_assumption2(w: &MixingMatrix, w_min: f64) -> MixingReport {
    let m = &w.weights;
    let n = m.nrows();
    let max_row_deviation = (0..n)
        .map(|i| (m.row(i).sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let max_col_deviation = (0..n)
        .map(|j| (m.column(j).sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let min_positive = m.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    MixingReport {
        max_row_deviation,
        max_col_deviation,
        min_positive,
        diagonal_positive: (0..n).all(|i| m[(i, i)] > 0.0),
        nonnegative: m.iter().all(|v| *v >= 0.0),
        w_min,
    }
}

/// `z_i = sum_j W[i][j] * xhat_j`.
pub fn consensus_mix(w: &MixingMatrix, broadcasts: &[DecisionVector]) -> Result<Vec<DecisionVector>> {
    let n = w.agents();
    if broadcasts.len() != n {
        return Err(Error::DimensionMismatch {
            context: "consensus_mix agents",
            expected: n,
            actual: broadcasts.len(),
        });
    }
    let p = broadcasts[0].dim();
    if let Some(bad) = broadcasts.iter().find(|b| b.dim() != p) {
        return Err(Error::DimensionMismatch {
            context: "consensus_mix decision",
            expected: p,
            actual: bad.dim(),
        });
    }
    (0..n)
        .map(|i| {
            let mut z = nalgebra::DVector::zeros(p);
            for (j, xj) in broadcasts.iter().enumerate() {
                let wij = w.weights[(i, j)];
                if wij != 0.0 {
                    z.axpy(wij, xj.as_dvector(), 1.0);
                }
            }
            DecisionVector::from_dvector(z)
        })
        .collect()
}

/// Supplies the mixing matrix `W_t` of each round (1-based).
pub trait MixingSource: Send + Sync {
    fn agents(&self) -> usize;
    fn mixing(&self, t: usize) -> Result<MixingMatrix>;
    /// Lower bound `w` on positive weights this source promises.
    fn w_min(&self) -> f64 {
        1.0 / self.agents() as f64
    }
}

impl MixingSource for GraphSchedule {
    fn agents(&self) -> usize {
        self.n
    }

    fn mixing(&self, t: usize) -> Result<MixingMatrix> {
        build_mixing_matrix(&gen_round_graph(self, t))
    }
}

/// A user-supplied sequence of matrices, cycled over rounds.
#[derive(Debug, Clone)]
pub struct FixedMixing {
    matrices: Vec<MixingMatrix>,
    w_min: f64,
}

impl FixedMixing {
    pub fn new(matrices: Vec<MixingMatrix>, w_min: f64) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::InvalidParameter("no mixing matrices given".into()));
        };
        let n = first.agents();
        if let Some(bad) = matrices.iter().find(|m| m.agents() != n) {
            return Err(Error::DimensionMismatch {
                context: "mixing sequence",
                expected: n,
                actual: bad.agents(),
            });
        }
        Ok(Self { matrices, w_min })
    }

    pub fn constant(matrix: MixingMatrix) -> Self {
        let w_min = matrix
            .weights
            .iter()
            .copied()
            .filter(|v| *v > 0.0)
            .fold(1.0, f64::min);
        Self { matrices: vec![matrix], w_min }
    }
}

impl MixingSource for FixedMixing {
    fn agents(&self) -> usize {
        self.matrices[0].agents()
    }

    fn mixing(&self, t: usize) -> Result<MixingMatrix> {
        Ok(self.matrices[(t.max(1) - 1) % self.matrices.len()].clone())
    }

    fn w_min(&self) -> f64 {
        self.w_min
    }
}

/// Result of scanning windows of `window` consecutive rounds for strong connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityReport {
    pub window: usize,
    pub windows_checked: usize,
    /// First round of the first window whose union graph is not strongly connected.
    pub first_failure: Option<usize>,
}

impl ConnectivityReport {
    pub fn passes(&self) -> bool {
        self.first_failure.is_none()
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn strongly_connected(n: usize, arcs: &BTreeSet<(usize, usize)>) -> bool {
    if n <= 1 {
        return true;
    }
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for &(a, b) in arcs {
        fwd[a].push(b);
        bwd[b].push(a);
    }
    reaches_all(&fwd) && reaches_all(&bwd)
}

/// Checks Assumption 2(iii) over rounds `1..=rounds` for the given window B.
/// Arcs are read from the positive off-diagonal weights.
pub fn check_joint_connectivity(
    source: &dyn MixingSource,
    rounds: usize,
    window: usize,
) -> Result<ConnectivityReport> {
    if window == 0 {
        return Err(Error::InvalidParameter("window B must be positive".into()));
    }
    let n = source.agents();
    let per_round: Vec<BTreeSet<(usize, usize)>> = (1..=rounds)
        .map(|t| {
            let w = source.mixing(t)?;
            let mut arcs = BTreeSet::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j && w.get(i, j) > 0.0 {
                        arcs.insert((j, i));
                    }
                }
            }
            Ok(arcs)
        })
        .collect::<Result<_>>()?;
    let mut windows_checked = 0;
    let mut first_failure = None;
    for start in 0..rounds.saturating_sub(window - 1) {
        let union: BTreeSet<_> = per_round[start..start + window]
            .iter()
            .flatten()
            .copied()
            .collect();
        windows_checked += 1;
        if !strongly_connected(n, &union) {
            first_failure = Some(start + 1);
            break;
        }
    }
    Ok(ConnectivityReport { window, windows_checked, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(e: &EdgeSet) -> Vec<(usize, usize)> {
        e.pairs().collect()
    }

    #[test]
    fn no_random_edges_leaves_the_path() {
        let g = GraphSchedule::new(3, 0.0, 11).unwrap();
        assert_eq!(pairs(&gen_round_graph(&g, 1)), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn full_probability_gives_complete_graph() {
        let g = GraphSchedule::new(3, 1.0, 11).unwrap();
        assert_eq!(pairs(&gen_round_graph(&g, 5)), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn graph_generation_is_deterministic() {
        let g = GraphSchedule::new(30, 0.1, 99).unwrap();
        for t in 1..20 {
            assert_eq!(gen_round_graph(&g, t), gen_round_graph(&g, t));
            assert_eq!(g.mixing(t).unwrap(), g.mixing(t).unwrap());
        }
        assert_ne!(gen_round_graph(&g, 1), gen_round_graph(&g, 2));
    }

    #[test]
    fn two_agent_matrix() {
        let mut e = EdgeSet::new(2, EdgeKind::Undirected);
        e.insert(0, 1).unwrap();
        let w = build_mixing_matrix(&e).unwrap();
        assert_eq!(w.weights().as_slice(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn empty_edge_set_gives_identity() {
        let w = build_mixing_matrix(&EdgeSet::new(3, EdgeKind::Undirected)).unwrap();
        assert_eq!(w, MixingMatrix::identity(3));
    }

    #[test]
    fn directed_arcs_fill_receiver_rows() {
        let mut e = EdgeSet::new(3, EdgeKind::Directed);
        e.insert(0, 2).unwrap();
        let w = build_mixing_matrix(&e).unwrap();
        assert_eq!(w.get(2, 0), 1.0 / 3.0);
        assert_eq!(w.get(0, 2), 0.0);
        // receiver-only weights are row stochastic but not column stochastic
        assert!(!validate_assumption2(&w, 1.0 / 3.0).passes());
    }

    #[test]
    fn identity_passes_validation() {
        assert!(validate_assumption2(&MixingMatrix::identity(4), 0.5).passes());
    }

    #[test]
    fn column_defect_fails_validation() {
        let w = MixingMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let r = validate_assumption2(&w, 0.1);
        assert!(!r.passes());
        assert!((r.max_col_deviation - 0.1).abs() < 1e-12);
        assert!(r.failures().iter().any(|f| f.starts_with("Assumption 2(ii)")));
    }

    #[test]
    fn weight_floor_is_checked() {
        let w = MixingMatrix::from_rows(&[vec![0.95, 0.05], vec![0.05, 0.95]]).unwrap();
        let r = validate_assumption2(&w, 0.1);
        assert!(r.doubly_stochastic());
        assert!(!r.passes());
        assert!(r.failures()[0].starts_with("Assumption 2(i)"));
    }

    #[test]
    fn consensus_examples() {
        let v = DecisionVector::new(vec![1.5, -2.0]).unwrap();
        let xs = vec![v.clone(); 3];
        let g = GraphSchedule::new(3, 0.5, 1).unwrap();
        let w = g.mixing(1).unwrap();
        for z in consensus_mix(&w, &xs).unwrap() {
            assert!(z.distance(&v) < 1e-15);
        }
        let id = MixingMatrix::identity(2);
        let xs = vec![
            DecisionVector::new(vec![0.0]).unwrap(),
            DecisionVector::new(vec![4.0]).unwrap(),
        ];
        assert_eq!(consensus_mix(&id, &xs).unwrap(), xs);
        let half = MixingMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let z = consensus_mix(&half, &xs).unwrap();
        assert_eq!(z[0].as_slice(), &[2.0]);
        assert_eq!(z[1].as_slice(), &[2.0]);
    }

    #[test]
    fn consensus_rejects_wrong_agent_count() {
        let id = MixingMatrix::identity(3);
        let xs = vec![DecisionVector::zeros(1); 2];
        assert!(consensus_mix(&id, &xs).is_err());
    }

    #[test]
    fn consensus_preserves_the_mean() {
        let g = GraphSchedule::new(12, 0.3, 5).unwrap();
        let mut rng = seeding::stream(3, Purpose::Sampling, 0, 0);
        for t in 1..30 {
            let w = g.mixing(t).unwrap();
            let xs: Vec<DecisionVector> = (0..12)
                .map(|_| DecisionVector::new((0..4).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap())
                .collect();
            let zs = consensus_mix(&w, &xs).unwrap();
            for k in 0..4 {
                let before: f64 = xs.iter().map(|x| x[k]).sum::<f64>() / 12.0;
                let after: f64 = zs.iter().map(|z| z[k]).sum::<f64>() / 12.0;
                assert!((before - after).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn path_edges_make_every_round_connected() {
        let g = GraphSchedule::new(15, 0.0, 2).unwrap();
        let r = check_joint_connectivity(&g, 10, 1).unwrap();
        assert!(r.passes());
        assert_eq!(r.windows_checked, 10);
    }

    #[test]
    fn identity_sequence_is_not_connected() {
        let src = FixedMixing::constant(MixingMatrix::identity(3));
        let r = check_joint_connectivity(&src, 4, 2).unwrap();
        assert_eq!(r.first_failure, Some(1));
    }

    #[test]
    fn alternating_graphs_are_jointly_connected() {
        let mut e1 = EdgeSet::new(3, EdgeKind::Undirected);
        e1.insert(0, 1).unwrap();
        let mut e2 = EdgeSet::new(3, EdgeKind::Undirected);
        e2.insert(1, 2).unwrap();
        let src = FixedMixing::new(
            vec![build_mixing_matrix(&e1).unwrap(), build_mixing_matrix(&e2).unwrap()],
            1.0 / 3.0,
        )
        .unwrap();
        assert!(!check_joint_connectivity(&src, 6, 1).unwrap().passes());
        assert!(check_joint_connectivity(&src, 6, 2).unwrap().passes());
    }
}
