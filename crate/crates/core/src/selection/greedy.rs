use rayon::prelude::*;

use super::{check_budget, first_near_min, tie_tolerance};
use crate::chain::{
    check_dims, f0_unchecked, node_objective_masked, Edge, EdgeSelection, ItemDistribution,
    NodeSelection, TransitionMatrix, RESIDUAL_EPSILON,
};
use crate::error::Result;

/// Below this many candidates a scan runs on the calling thread.
const PARALLEL_MIN_CANDIDATES: usize = 512;

/// Per-node bookkeeping that lets the greedy selectors score a candidate
/// without re-evaluating the whole objective.
///
/// For every source node `u` with observed edge set `D_u` it keeps
///
/// * `rho(u) = Σ_{e ∈ D_u} P(e)`, and
/// * `b(u) = Σ_{e ∉ D_u} P(e) (1 - rho(u) - P(e))`,
///
/// so that `u` contributes `x(u) b(u) / (1 - rho(u))` to the objective.
/// Observing one more edge of probability `p` out of `u` updates the pair as
/// `rho += p`, `b -= 2p(1 - rho - p)`, and the new contribution can be read
/// off the old `b` as `x(u) (b / (1 - rho - p) - 2p)`.
///
/// Monitoring a node `v` observes every edge into `v`, each of which belongs
/// to a different parent, so a node candidate only touches `π(v)`.
#[derive(Clone, Debug)]
pub struct GreedyState<'a> {
    matrix: &'a TransitionMatrix,
    x: &'a [f64],
    rho: Vec<f64>,
    b: Vec<f64>,
    hidden: Vec<usize>,
    contribution: Vec<f64>,
    observed: Vec<bool>,
    current_objective: f64,
}

impl<'a> GreedyState<'a> {
    pub fn new(matrix: &'a TransitionMatrix, items: &'a ItemDistribution) -> Result<Self> {
        check_dims(matrix, items)?;
        let x = items.as_slice();
        let n = matrix.n();
        let b: Vec<f64> = (0..n).map(|u| matrix.row_variance(u)).collect();
        let contribution: Vec<f64> = (0..n).map(|u| x[u] * b[u]).collect();
        Ok(GreedyState {
            matrix,
            x,
            rho: vec![0.0; n],
            b,
            hidden: (0..n).map(|u| matrix.out_degree(u)).collect(),
            current_objective: contribution.iter().sum(),
            contribution,
            observed: vec![false; matrix.edge_count()],
        })
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn objective(&self) -> f64 {
        self.current_objective
    }

    pub fn is_observed(&self, edge_index: usize) -> bool {
        self.observed[edge_index]
    }

    /// Contribution of `u` after additionally observing an edge of
    /// probability `p` out of it.
    fn contribution_after(&self, u: usize, p: f64) -> f64 {
        let rest = 1.0 - self.rho[u] - p;
        if self.x[u] == 0.0 || self.hidden[u] <= 1 || rest < RESIDUAL_EPSILON {
            return 0.0;
        }
        (self.x[u] * (self.b[u] / rest - 2.0 * p)).max(0.0)
    }

    fn edge_gain(&self, e: usize, u: usize) -> f64 {
        if self.observed[e] {
            return 0.0;
        }
        self.contribution[u] - self.contribution_after(u, self.matrix.edge_prob(e))
    }

    /// Objective after also observing edge `e`.
    pub fn objective_with_edge(&self, e: usize) -> f64 {
        let (edge, _) = self.matrix.edge(e);
        self.current_objective - self.edge_gain(e, edge.from)
    }

    /// Objective after also monitoring node `v`.
    pub fn objective_with_node(&self, v: usize) -> f64 {
        self.current_objective
            - self
                .matrix
                .parents(v)
                .map(|(u, _, e)| self.edge_gain(e, u))
                .sum::<f64>()
    }

    fn observe(&mut self, e: usize, u: usize) {
        if std::mem::replace(&mut self.observed[e], true) {
            return;
        }
        let p = self.matrix.edge_prob(e);
        self.b[u] -= 2.0 * p * (1.0 - self.rho[u] - p);
        self.rho[u] += p;
        self.hidden[u] -= 1;
        let rest = 1.0 - self.rho[u];
        self.contribution[u] = if self.x[u] == 0.0 || self.hidden[u] <= 1 || rest < RESIDUAL_EPSILON
        {
            0.0
        } else {
            (self.x[u] * self.b[u] / rest).max(0.0)
        };
    }

    fn refresh_objective(&mut self) {
        self.current_objective = self.contribution.iter().sum();
    }

    pub fn observe_edge(&mut self, e: usize) {
        let (edge, _) = self.matrix.edge(e);
        self.observe(e, edge.from);
        self.refresh_objective();
    }

    pub fn observe_node(&mut self, v: usize) {
        let parents: Vec<(usize, usize)> = self.matrix.parents(v).map(|(u, _, e)| (u, e)).collect();
        for (u, e) in parents {
            self.observe(e, u);
        }
        self.refresh_objective();
    }
}

fn scan<F>(count: usize, eval: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if count < PARALLEL_MIN_CANDIDATES {
        (0..count).map(eval).collect()
    } else {
        (0..count)
            .into_par_iter()
            .with_min_len(64)
            .map(eval)
            .collect()
    }
}

/// Greedy node selection for ParentTransitions / NodeItems using the
/// incremental bookkeeping of [`GreedyState`].
pub fn node_greedy(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k: usize,
) -> Result<NodeSelection> {
    check_budget(k, matrix.n(), "nodes")?;
    let mut state = GreedyState::new(matrix, items)?;
    let baseline = state.objective();
    let tol = tie_tolerance(baseline);
    let mut chosen = vec![false; matrix.n()];
    let mut nodes = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    for _ in 0..k {
        let values = scan(matrix.n(), |v| {
            if chosen[v] {
                f64::INFINITY
            } else {
                state.objective_with_node(v)
            }
        });
        let v = first_near_min(&values, tol).expect("budget checked against n");
        chosen[v] = true;
        state.observe_node(v);
        nodes.push(v);
        trace.push(state.objective());
    }
    Ok(NodeSelection {
        nodes,
        objective_trace: trace,
        baseline,
    })
}

/// Greedy node selection that re-evaluates the objective from scratch for
/// every candidate. Kept as an equivalence oracle for [`node_greedy`].
pub fn node_greedy_naive(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k: usize,
) -> Result<NodeSelection> {
    check_dims(matrix, items)?;
    check_budget(k, matrix.n(), "nodes")?;
    let x = items.as_slice();
    let baseline = f0_unchecked(matrix, x);
    let tol = tie_tolerance(baseline);
    let mut in_set = vec![false; matrix.n()];
    let mut nodes = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    for _ in 0..k {
        let values = scan(matrix.n(), |v| {
            if in_set[v] {
                return f64::INFINITY;
            }
            let mut trial = in_set.clone();
            trial[v] = true;
            node_objective_masked(matrix, x, &trial)
        });
        let v = first_near_min(&values, tol).expect("budget checked against n");
        in_set[v] = true;
        nodes.push(v);
        trace.push(node_objective_masked(matrix, x, &in_set));
    }
    Ok(NodeSelection {
        nodes,
        objective_trace: trace,
        baseline,
    })
}

/// Greedy edge selection for EdgeTransitions. Each candidate touches only
/// its source node, so an iteration costs `O(|E|)`.
pub fn edge_greedy(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k: usize,
) -> Result<EdgeSelection> {
    check_budget(k, matrix.edge_count(), "edges")?;
    let mut state = GreedyState::new(matrix, items)?;
    let baseline = state.objective();
    let tol = tie_tolerance(baseline);
    let sources: Vec<usize> = (0..matrix.n())
        .flat_map(|u| matrix.row_range(u).map(move |_| u))
        .collect();
    let mut edges = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    for _ in 0..k {
        let values = scan(matrix.edge_count(), |e| {
            if state.is_observed(e) {
                f64::INFINITY
            } else {
                state.objective() - state.edge_gain(e, sources[e])
            }
        });
        let e = first_near_min(&values, tol).expect("budget checked against m");
        state.observe(e, sources[e]);
        state.refresh_objective();
        edges.push(Edge::new(sources[e], matrix.edge_target(e)));
        trace.push(state.objective());
    }
    Ok(EdgeSelection {
        edges,
        objective_trace: trace,
        baseline,
    })
}

/// From-scratch edge objective, used by tests to cross-check the state.
#[cfg(test)]
pub(crate) fn edge_objective_from_scratch(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    state: &GreedyState<'_>,
) -> f64 {
    crate::chain::edge_objective_masked(matrix, items.as_slice(), &state.observed)
}
