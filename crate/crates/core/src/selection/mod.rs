//! Budget-k selection of monitoring operations.
//!
//! All selectors break ties toward the smallest node id (lexicographically
//! smallest edge). Two candidate objectives are considered tied when they
//! differ by at most [`TIE_RELATIVE_TOLERANCE`] times `F₀`, so that the
//! incremental and the from-scratch evaluations, which round differently,
//! still agree on the pick.

mod brute;
mod dp;
mod greedy;

pub use brute::{brute_force_edges, brute_force_nodes, DEFAULT_BRUTE_FORCE_CAP};
pub use dp::{edge_dp, DpTable};
pub use greedy::{edge_greedy, node_greedy, node_greedy_naive, GreedyState};

use crate::chain::{check_dims, f0_unchecked, ItemDistribution, NodeSelection, TransitionMatrix};
use crate::error::{Error, Result};

pub const TIE_RELATIVE_TOLERANCE: f64 = 1e-12;

pub(crate) fn tie_tolerance(f0: f64) -> f64 {
    TIE_RELATIVE_TOLERANCE * f0.abs()
}

/// Index of the first value within `tol` of the minimum. Infinite entries
/// mark unavailable candidates.
pub(crate) fn first_near_min(values: &[f64], tol: f64) -> Option<usize> {
    let min = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    values.iter().position(|&v| v <= min + tol)
}

pub(crate) fn check_budget(k: usize, available: usize, kind: &'static str) -> Result<()> {
    if k > available {
        return Err(Error::BudgetTooLarge { k, available, kind });
    }
    Ok(())
}

/// Exact optimum for ChildrenTransitions. The objective is a sum of
/// independent per-node terms `c(u) = x(u) Σ_v P(u,v)(1 - P(u,v))`, so
/// removing the `k` largest terms is optimal.
pub fn children_topk(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k: usize,
) -> Result<NodeSelection> {
    check_dims(matrix, items)?;
    check_budget(k, matrix.n(), "nodes")?;
    let x = items.as_slice();
    let scores: Vec<f64> = (0..matrix.n())
        .map(|u| {
            if x[u] > 0.0 {
                x[u] * matrix.row_variance(u)
            } else {
                0.0
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..matrix.n()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);

    let mut in_set = vec![false; matrix.n()];
    let mut trace = Vec::with_capacity(k);
    for &u in &order {
        in_set[u] = true;
        trace.push(
            (0..matrix.n())
                .filter(|&v| !in_set[v])
                .map(|v| scores[v])
                .sum(),
        );
    }
    Ok(NodeSelection {
        nodes: order,
        objective_trace: trace,
        baseline: f0_unchecked(matrix, x),
    })
}
