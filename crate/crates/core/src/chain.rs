//! Transition matrices, item placements, and the closed-form expected
//! uncertainty of the post-transition item counts under each kind of
//! monitoring operation.
//!
//! Every functional is a single pass over the stored (non-zero) edges, so an
//! evaluation costs `O(n + m)` regardless of how dense the chain would be as
//! an `n x n` matrix.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed deviation of a row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A node whose unobserved outgoing mass `1 - rho(u, S)` falls below this is
/// treated as fully observed and contributes nothing.
pub const RESIDUAL_EPSILON: f64 = 1e-12;

/// A directed edge `from -> to`. Ordering is lexicographic on `(from, to)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub fn new(from: usize, to: usize) -> Self {
        Edge { from, to }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl FromStr for Edge {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("->")
            .ok_or_else(|| format!("expected `u->v`, got `{s}`"))?;
        let from = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
        let to = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
        Ok(Edge { from, to })
    }
}

/// Sparse row-stochastic matrix stored as CSR with a transposed (CSC) index
/// for parent lookups. Rows are sorted by target id, so the global edge index
/// of an entry is also its rank in lexicographic edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    row_offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
    col_offsets: Vec<usize>,
    parent_ids: Vec<usize>,
    parent_edges: Vec<usize>,
}

impl TransitionMatrix {
    /// Builds a matrix from per-node rows of `(target, probability)`.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidMatrix("chain has no nodes".into()));
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        row_offsets.push(0);
        for (u, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(v, _)| v);
            let mut sum = 0.0;
            for (i, &(v, p)) in row.iter().enumerate() {
                if v >= n {
                    return Err(Error::InvalidMatrix(format!(
                        "row {u} targets node {v} but n = {n}"
                    )));
                }
                if i > 0 && row[i - 1].0 == v {
                    return Err(Error::InvalidMatrix(format!(
                        "row {u} lists target {v} twice"
                    )));
                }
                if !(p.is_finite() && p > 0.0 && p <= 1.0 + ROW_SUM_TOLERANCE) {
                    return Err(Error::InvalidMatrix(format!(
                        "row {u} has probability {p} for target {v}"
                    )));
                }
                sum += p;
                targets.push(v);
                probs.push(p);
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidMatrix(format!(
                    "row {u} sums to {sum}, not 1"
                )));
            }
            row_offsets.push(targets.len());
        }

        let mut col_offsets = vec![0usize; n + 1];
        for &v in &targets {
            col_offsets[v + 1] += 1;
        }
        for v in 0..n {
            col_offsets[v + 1] += col_offsets[v];
        }
        let mut fill = col_offsets.clone();
        let mut parent_ids = vec![0; targets.len()];
        let mut parent_edges = vec![0; targets.len()];
        for u in 0..n {
            let row = row_offsets[u]..row_offsets[u + 1];
            for (e, &v) in row.clone().zip(&targets[row]) {
                parent_ids[fill[v]] = u;
                parent_edges[fill[v]] = e;
                fill[v] += 1;
            }
        }

        Ok(TransitionMatrix {
            row_offsets,
            targets,
            probs,
            col_offsets,
            parent_ids,
            parent_edges,
        })
    }

    /// Builds a matrix from `(u, v, p)` triples over `n` nodes.
    pub fn from_triples(
        n: usize,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut rows = vec![Vec::new(); n];
        for (u, v, p) in triples {
            if u >= n {
                return Err(Error::InvalidMatrix(format!(
                    "source {u} out of range for n = {n}"
                )));
            }
            rows[u].push((v, p));
        }
        Self::from_rows(rows)
    }

    /// Uniform out-probabilities over each node's distinct out-neighbours.
    /// Nodes without out-neighbours get a probability-1 self-loop.
    pub fn uniform(adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let rows = adjacency
            .into_iter()
            .enumerate()
            .map(|(u, mut out)| {
                out.sort_unstable();
                out.dedup();
                if out.is_empty() {
                    out.push(u);
                }
                let p = 1.0 / out.len() as f64;
                out.into_iter().map(|v| (v, p)).collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Global edge indices of the outgoing edges of `u`.
    pub fn row_range(&self, u: usize) -> Range<usize> {
        self.row_offsets[u]..self.row_offsets[u + 1]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.row_offsets[u + 1] - self.row_offsets[u]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.col_offsets[v + 1] - self.col_offsets[v]
    }

    /// Children `κ(u)` with their transition probabilities, by ascending id.
    pub fn children(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_range(u);
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.probs[r].iter().copied())
    }

    /// Parents `π(v)` as `(parent, probability, edge index)`, by ascending id.
    pub fn parents(&self, v: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        let r = self.col_offsets[v]..self.col_offsets[v + 1];
        self.parent_ids[r.clone()]
            .iter()
            .zip(&self.parent_edges[r])
            .map(move |(&u, &e)| (u, self.probs[e], e))
    }

    pub fn edge(&self, index: usize) -> (Edge, f64) {
        let from = self.row_offsets.partition_point(|&o| o <= index) - 1;
        (Edge::new(from, self.targets[index]), self.probs[index])
    }

    pub fn edge_target(&self, index: usize) -> usize {
        self.targets[index]
    }

    pub fn edge_prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn edge_index(&self, edge: Edge) -> Option<usize> {
        if edge.from >= self.n() {
            return None;
        }
        let r = self.row_range(edge.from);
        self.targets[r.clone()]
            .binary_search(&edge.to)
            .ok()
            .map(|i| r.start + i)
    }

    /// `P(u, v)`, zero when the edge is absent.
    pub fn prob(&self, u: usize, v: usize) -> f64 {
        self.edge_index(Edge::new(u, v))
            .map_or(0.0, |e| self.probs[e])
    }

    /// All stored edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        (0..self.n()).flat_map(move |u| self.children(u).map(move |(v, p)| (Edge::new(u, v), p)))
    }

    /// `Σ_v P(u,v)(1 - P(u,v))`, the per-item variance contributed by `u`.
    pub fn row_variance(&self, u: usize) -> f64 {
        self.children(u).map(|(_, p)| p * (1.0 - p)).sum()
    }
}

/// Non-negative item mass per node.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemDistribution(Vec<f64>);

impl ItemDistribution {
    pub fn new(items: Vec<f64>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidItems("empty item vector".into()));
        }
        if let Some((u, x)) = items
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x >= 0.0))
        {
            return Err(Error::InvalidItems(format!("node {u} has mass {x}")));
        }
        if items.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidItems("total item mass is zero".into()));
        }
        Ok(ItemDistribution(items))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|x| x * factor).collect())
    }

    /// The masses as whole item counts; fails if any mass is fractional.
    pub fn integer_counts(&self) -> Result<Vec<u64>> {
        self.0
            .iter()
            .enumerate()
            .map(|(u, &x)| {
                if x.fract() == 0.0 && x <= u64::MAX as f64 {
                    Ok(x as u64)
                } else {
                    Err(Error::InvalidItems(format!(
                        "node {u} holds {x} items, expected an integer"
                    )))
                }
            })
            .collect()
    }
}

/// Which closed form scores a node set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeObjective {
    /// ParentTransitions, equivalently NodeItems.
    Parents,
    /// ChildrenTransitions.
    Children,
}

/// Monitored node set in selection order, with the objective after each prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSelection {
    pub nodes: Vec<usize>,
    pub objective_trace: Vec<f64>,
    /// Objective of the empty selection, `F₀`.
    pub baseline: f64,
}

impl NodeSelection {
    /// Scores every prefix of `nodes` from scratch.
    pub fn evaluate(
        matrix: &TransitionMatrix,
        items: &ItemDistribution,
        nodes: &[usize],
        objective: NodeObjective,
    ) -> Result<Self> {
        check_dims(matrix, items)?;
        node_mask(matrix.n(), nodes)?;
        let x = items.as_slice();
        let mut in_set = vec![false; matrix.n()];
        let mut trace = Vec::with_capacity(nodes.len());
        for &v in nodes {
            in_set[v] = true;
            trace.push(match objective {
                NodeObjective::Parents => node_objective_masked(matrix, x, &in_set),
                NodeObjective::Children => children_objective_masked(matrix, x, &in_set),
            });
        }
        Ok(NodeSelection {
            nodes: nodes.to_vec(),
            objective_trace: trace,
            baseline: f0_unchecked(matrix, x),
        })
    }

    pub fn objective(&self) -> f64 {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or(self.baseline)
    }

    pub fn report(&self) -> UncertaintyReport {
        UncertaintyReport::new(self.baseline, self.objective())
    }

    /// Checks the structural invariants: distinct in-range ids, one trace
    /// entry per node, non-increasing trace bounded by `F₀`.
    pub fn check(&self, n: usize, tolerance: f64) -> std::result::Result<(), String> {
        node_mask(n, &self.nodes).map_err(|e| e.to_string())?;
        check_trace(
            &self.objective_trace,
            self.nodes.len(),
            self.baseline,
            tolerance,
        )
    }
}

/// Monitored edge set in selection order, with the objective after each prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSelection {
    pub edges: Vec<Edge>,
    pub objective_trace: Vec<f64>,
    pub baseline: f64,
}

impl EdgeSelection {
    pub fn evaluate(
        matrix: &TransitionMatrix,
        items: &ItemDistribution,
        edges: &[Edge],
    ) -> Result<Self> {
        check_dims(matrix, items)?;
        let indices = edge_indices(matrix, edges)?;
        let x = items.as_slice();
        let mut observed = vec![false; matrix.edge_count()];
        let mut trace = Vec::with_capacity(edges.len());
        for e in indices {
            observed[e] = true;
            trace.push(edge_objective_masked(matrix, x, &observed));
        }
        Ok(EdgeSelection {
            edges: edges.to_vec(),
            objective_trace: trace,
            baseline: f0_unchecked(matrix, x),
        })
    }

    pub fn objective(&self) -> f64 {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or(self.baseline)
    }

    pub fn report(&self) -> UncertaintyReport {
        UncertaintyReport::new(self.baseline, self.objective())
    }

    pub fn check(
        &self,
        matrix: &TransitionMatrix,
        tolerance: f64,
    ) -> std::result::Result<(), String> {
        edge_indices(matrix, &self.edges).map_err(|e| e.to_string())?;
        check_trace(
            &self.objective_trace,
            self.edges.len(),
            self.baseline,
            tolerance,
        )
    }
}

fn check_trace(
    trace: &[f64],
    len: usize,
    baseline: f64,
    tolerance: f64,
) -> std::result::Result<(), String> {
    if trace.len() != len {
        return Err(format!("trace has {} entries for {len} picks", trace.len()));
    }
    let mut prev = baseline;
    for (i, &f) in trace.iter().enumerate() {
        if f < -tolerance || f > prev + tolerance {
            return Err(format!("trace entry {i} = {f} rises above {prev}"));
        }
        prev = f;
    }
    Ok(())
}

/// `F₀`, the achieved objective, and their ratio `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertaintyReport {
    pub f0: f64,
    pub f_sel: f64,
    pub ratio: f64,
}

impl UncertaintyReport {
    /// The ratio is 1 when `F₀ = 0`: nothing was uncertain, nothing was removed.
    pub fn new(f0: f64, f_sel: f64) -> Self {
        let ratio = if f0 > 0.0 { f_sel / f0 } else { 1.0 };
        UncertaintyReport { f0, f_sel, ratio }
    }
}

pub(crate) fn check_dims(matrix: &TransitionMatrix, items: &ItemDistribution) -> Result<()> {
    if matrix.n() != items.len() {
        return Err(Error::DimensionMismatch {
            nodes: matrix.n(),
            items: items.len(),
        });
    }
    Ok(())
}

pub(crate) fn node_mask(n: usize, nodes: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &v in nodes {
        if v >= n {
            return Err(Error::InvalidNode { node: v, n });
        }
        if std::mem::replace(&mut mask[v], true) {
            return Err(Error::DuplicateSelection(v.to_string()));
        }
    }
    Ok(mask)
}

pub(crate) fn edge_indices(matrix: &TransitionMatrix, edges: &[Edge]) -> Result<Vec<usize>> {
    let mut seen = vec![false; matrix.edge_count()];
    edges
        .iter()
        .map(|&e| {
            let idx = matrix.edge_index(e).ok_or(Error::UnknownEdge {
                from: e.from,
                to: e.to,
            })?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::DuplicateSelection(e.to_string()));
            }
            Ok(idx)
        })
        .collect()
}

pub(crate) fn f0_unchecked(matrix: &TransitionMatrix, x: &[f64]) -> f64 {
    (0..matrix.n())
        .filter(|&u| x[u] > 0.0)
        .map(|u| x[u] * matrix.row_variance(u))
        .sum()
}

/// Expected uncertainty contributed by one node once the fraction `rho` of its
/// outgoing mass is observed, with `unobserved` the probabilities of the
/// edges that remain hidden.
pub(crate) fn conditioned_term(mass: f64, rho: f64, unobserved: impl Iterator<Item = f64>) -> f64 {
    let rest = 1.0 - rho;
    if mass == 0.0 || rest < RESIDUAL_EPSILON {
        return 0.0;
    }
    let adjusted_mass = mass * rest;
    let spread: f64 = unobserved
        .map(|p| {
            let q = p / rest;
            q * (1.0 - q)
        })
        .sum();
    (adjusted_mass * spread).max(0.0)
}

pub(crate) fn node_objective_masked(matrix: &TransitionMatrix, x: &[f64], in_set: &[bool]) -> f64 {
    (0..matrix.n())
        .map(|u| {
            let rho: f64 = matrix
                .children(u)
                .filter(|&(v, _)| in_set[v])
                .map(|(_, p)| p)
                .sum();
            conditioned_term(
                x[u],
                rho,
                matrix
                    .children(u)
                    .filter(|&(v, _)| !in_set[v])
                    .map(|(_, p)| p),
            )
        })
        .sum()
}

pub(crate) fn edge_objective_masked(
    matrix: &TransitionMatrix,
    x: &[f64],
    observed: &[bool],
) -> f64 {
    (0..matrix.n())
        .map(|u| {
            let r = matrix.row_range(u);
            let rho: f64 = r
                .clone()
                .filter(|&e| observed[e])
                .map(|e| matrix.edge_prob(e))
                .sum();
            conditioned_term(
                x[u],
                rho,
                r.filter(|&e| !observed[e]).map(|e| matrix.edge_prob(e)),
            )
        })
        .sum()
}

pub(crate) fn children_objective_masked(
    matrix: &TransitionMatrix,
    x: &[f64],
    in_set: &[bool],
) -> f64 {
    (0..matrix.n())
        .filter(|&u| !in_set[u] && x[u] > 0.0)
        .map(|u| x[u] * matrix.row_variance(u))
        .sum()
}

/// Aggregate variance `F₀` of the post-transition node counts with no
/// monitoring.
pub fn baseline_uncertainty(matrix: &TransitionMatrix, items: &ItemDistribution) -> Result<f64> {
    check_dims(matrix, items)?;
    Ok(f0_unchecked(matrix, items.as_slice()))
}

/// Expected post-transition counts `z = xP`.
pub fn expected_items(matrix: &TransitionMatrix, items: &ItemDistribution) -> Result<Vec<f64>> {
    check_dims(matrix, items)?;
    let x = items.as_slice();
    let mut z = vec![0.0; matrix.n()];
    for (e, p) in matrix.edges() {
        z[e.to] += x[e.from] * p;
    }
    Ok(z)
}

/// `ρ(u, S)`: probability that an item at `u` moves into `S`.
pub fn residual_probability(matrix: &TransitionMatrix, u: usize, nodes: &[usize]) -> Result<f64> {
    if u >= matrix.n() {
        return Err(Error::InvalidNode {
            node: u,
            n: matrix.n(),
        });
    }
    let mask = node_mask(matrix.n(), nodes)?;
    Ok(matrix
        .children(u)
        .filter(|&(v, _)| mask[v])
        .map(|(_, p)| p)
        .sum())
}

/// Expected uncertainty after ParentTransitions (equivalently NodeItems)
/// queries on `nodes`.
pub fn uncertainty_node(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    nodes: &[usize],
) -> Result<f64> {
    check_dims(matrix, items)?;
    let mask = node_mask(matrix.n(), nodes)?;
    Ok(node_objective_masked(matrix, items.as_slice(), &mask))
}

/// Expected uncertainty after EdgeTransitions queries on `edges`.
pub fn uncertainty_edge(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    edges: &[Edge],
) -> Result<f64> {
    check_dims(matrix, items)?;
    let mut observed = vec![false; matrix.edge_count()];
    for e in edge_indices(matrix, edges)? {
        observed[e] = true;
    }
    Ok(edge_objective_masked(matrix, items.as_slice(), &observed))
}

/// Expected uncertainty after ChildrenTransitions queries on `nodes`.
pub fn uncertainty_children(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    nodes: &[usize],
) -> Result<f64> {
    check_dims(matrix, items)?;
    let mask = node_mask(matrix.n(), nodes)?;
    Ok(children_objective_masked(matrix, items.as_slice(), &mask))
}
