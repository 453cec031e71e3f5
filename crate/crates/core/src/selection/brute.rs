//! Exhaustive search over all size-k subsets. Test oracle only.

use itertools::Itertools;

use super::{check_budget, tie_tolerance};
use crate::chain::{
    check_dims, children_objective_masked, edge_objective_masked, f0_unchecked,
    node_objective_masked, EdgeSelection, ItemDistribution, NodeObjective, NodeSelection,
    TransitionMatrix,
};
use crate::error::{Error, Result};

pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 2_000_000;

fn binomial_capped(n: usize, k: usize, cap: u128) -> Result<()> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > cap {
            return Err(Error::CapExceeded { needed: c, cap });
        }
    }
    Ok(())
}

/// Scans subsets in lexicographic order and keeps the first one whose value
/// beats the incumbent by more than `tol`.
fn best_subset<F>(universe: usize, k: usize, tol: f64, mut eval: F) -> Vec<usize>
where
    F: FnMut(&[usize]) -> f64,
{
    let mut best = f64::INFINITY;
    let mut best_set = Vec::new();
    for combo in (0..universe).combinations(k) {
        let v = eval(&combo);
        if v < best - tol {
            best = v;
            best_set = combo;
        }
    }
    best_set
}

pub fn brute_force_nodes(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k: usize,
    objective: NodeObjective,
    cap: u128,
) -> Result<NodeSelection> {
    check_dims(matrix, items)?;
    check_budget(k, matrix.n(), "nodes")?;
    binomial_capped(matrix.n(), k, cap)?;
    let x = items.as_slice();
    let tol = tie_tolerance(f0_unchecked(matrix, x));
    let mut mask = vec![false; matrix.n()];
    let nodes = best_subset(matrix.n(), k, tol, |set| {
        set.iter().for_each(|&v| mask[v] = true);
        let f = match objective {
            NodeObjective::Parents => node_objective_masked(matrix, x, &mask),
            NodeObjective::Children => children_objective_masked(matrix, x, &mask),
        };
        set.iter().for_each(|&v| mask[v] = false);
        f
    });
    NodeSelection::evaluate(matrix, items, &nodes, objective)
}

pub fn brute_force_edges(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k: usize,
    cap: u128,
) -> Result<EdgeSelection> {
    check_dims(matrix, items)?;
    check_budget(k, matrix.edge_count(), "edges")?;
    binomial_capped(matrix.edge_count(), k, cap)?;
    let x = items.as_slice();
    let tol = tie_tolerance(f0_unchecked(matrix, x));
    let mut mask = vec![false; matrix.edge_count()];
    let picked = best_subset(matrix.edge_count(), k, tol, |set| {
        set.iter().for_each(|&e| mask[e] = true);
        let f = edge_objective_masked(matrix, x, &mask);
        set.iter().for_each(|&e| mask[e] = false);
        f
    });
    let edges: Vec<_> = picked.into_iter().map(|e| matrix.edge(e).0).collect();
    EdgeSelection::evaluate(matrix, items, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Edge;
    use approx::assert_abs_diff_eq;

    fn star() -> (TransitionMatrix, ItemDistribution) {
        let p = TransitionMatrix::from_rows(vec![
            vec![(1, 0.5), (2, 0.3), (3, 0.2)],
            vec![(1, 1.0)],
            vec![(2, 1.0)],
            vec![(3, 1.0)],
        ])
        .unwrap();
        (p, ItemDistribution::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap())
    }

    #[test]
    fn star_examples() {
        let (p, x) = star();
        let cap = DEFAULT_BRUTE_FORCE_CAP;
        let sel = brute_force_nodes(&p, &x, 1, NodeObjective::Parents, cap).unwrap();
        assert_eq!(sel.nodes, vec![1]);
        assert_abs_diff_eq!(sel.objective(), 0.24, epsilon = 1e-12);

        let sel = brute_force_edges(&p, &x, 1, cap).unwrap();
        assert_eq!(sel.edges, vec![Edge::new(0, 1)]);
        assert_abs_diff_eq!(sel.objective(), 0.24, epsilon = 1e-12);

        let sel = brute_force_nodes(&p, &x, 0, NodeObjective::Children, cap).unwrap();
        assert!(sel.nodes.is_empty());
        assert_abs_diff_eq!(sel.objective(), 0.62, epsilon = 1e-12);
    }

    #[test]
    fn lexicographically_smallest_optimum() {
        let (p, x) = star();
        // Any two of node 0's edges leave one edge with zero variance.
        let sel = brute_force_edges(&p, &x, 2, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        assert_eq!(sel.edges, vec![Edge::new(0, 1), Edge::new(0, 2)]);
    }

    #[test]
    fn cap_is_enforced() {
        let adj: Vec<Vec<usize>> = (0..40).map(|u| vec![(u + 1) % 40]).collect();
        let p = TransitionMatrix::uniform(adj).unwrap();
        let x = ItemDistribution::new(vec![1.0; 40]).unwrap();
        assert!(matches!(
            brute_force_nodes(&p, &x, 10, NodeObjective::Parents, DEFAULT_BRUTE_FORCE_CAP),
            Err(Error::CapExceeded { .. })
        ));
        assert!(brute_force_nodes(&p, &x, 2, NodeObjective::Parents, 10).is_err());
        assert!(brute_force_nodes(&p, &x, 2, NodeObjective::Parents, 780).is_ok());
    }
}
