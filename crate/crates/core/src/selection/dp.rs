//! Exact edge selection by dynamic programming over per-node budgets.
//!
//! For a single source node, observing its `m` most probable outgoing edges
//! is the best use of `m` observations, so the per-node optimum `isol[i][m]`
//! only needs the outgoing edges sorted by probability. The budget is then
//! split across nodes with
//!
//! ```text
//! sol[i][b] = min_{0 <= m <= min(b, deg i)} isol[i][m] + sol[i+1][b - m]
//! ```
//!
//! where `sol[n][0] = 0` and `sol[n][b > 0] = ∞`, i.e. exactly `b` edges are
//! spent among nodes `i..n`.

use super::{check_budget, tie_tolerance};
use crate::chain::{
    check_dims, conditioned_term, f0_unchecked, Edge, EdgeSelection, ItemDistribution,
    TransitionMatrix,
};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct DpTable {
    budget: usize,
    /// Per node, outgoing edge indices by descending probability, ties by child id.
    sorted: Vec<Vec<usize>>,
    isol: Vec<Vec<f64>>,
    sol: Vec<Vec<f64>>,
    choice: Vec<Vec<usize>>,
    baseline: f64,
}

impl DpTable {
    /// Fills the tables for every budget up to `budget`.
    pub fn build(
        matrix: &TransitionMatrix,
        items: &ItemDistribution,
        budget: usize,
    ) -> Result<Self> {
        check_dims(matrix, items)?;
        check_budget(budget, matrix.edge_count(), "edges")?;
        let x = items.as_slice();
        let n = matrix.n();
        let baseline = f0_unchecked(matrix, x);
        let tol = tie_tolerance(baseline);

        let sorted: Vec<Vec<usize>> = (0..n)
            .map(|u| {
                let mut row: Vec<usize> = matrix.row_range(u).collect();
                row.sort_by(|&a, &b| {
                    matrix
                        .edge_prob(b)
                        .total_cmp(&matrix.edge_prob(a))
                        .then(matrix.edge_target(a).cmp(&matrix.edge_target(b)))
                });
                row
            })
            .collect();

        let isol: Vec<Vec<f64>> = (0..n)
            .map(|u| {
                let probs: Vec<f64> = sorted[u].iter().map(|&e| matrix.edge_prob(e)).collect();
                let mut rho = 0.0;
                (0..=budget.min(probs.len()))
                    .map(|m| {
                        if m > 0 {
                            rho += probs[m - 1];
                        }
                        conditioned_term(x[u], rho, probs[m..].iter().copied())
                    })
                    .collect()
            })
            .collect();

        let mut sol = vec![vec![f64::INFINITY; budget + 1]; n + 1];
        sol[n][0] = 0.0;
        let mut choice = vec![vec![0usize; budget + 1]; n];
        let mut candidates = Vec::with_capacity(budget + 1);
        for i in (0..n).rev() {
            for b in 0..=budget {
                candidates.clear();
                candidates
                    .extend((0..=b.min(isol[i].len() - 1)).map(|m| isol[i][m] + sol[i + 1][b - m]));
                let best = candidates.iter().copied().fold(f64::INFINITY, f64::min);
                if !best.is_finite() {
                    continue;
                }
                // Largest m among the near-optimal splits: front-loads the
                // budget onto lower node ids.
                let m = candidates
                    .iter()
                    .rposition(|&v| v <= best + tol)
                    .expect("minimum is attained");
                choice[i][b] = m;
                sol[i][b] = candidates[m];
            }
        }

        Ok(DpTable {
            budget,
            sorted,
            isol,
            sol,
            choice,
            baseline,
        })
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// Per-node optimum `isol[u][m]` for `m = 0..=min(budget, deg u)`.
    pub fn isol(&self, u: usize) -> &[f64] {
        &self.isol[u]
    }

    /// Optimum when exactly `b` edges are spent among nodes `i..n`.
    pub fn sol(&self, i: usize, b: usize) -> f64 {
        self.sol[i][b]
    }

    /// Optimal objective with `k <= budget` edges.
    pub fn optimum(&self, k: usize) -> f64 {
        self.sol[0][k]
    }

    /// Number of edges given to each node in the optimal `k`-edge solution.
    pub fn allocation(&self, k: usize) -> Vec<usize> {
        assert!(k <= self.budget, "k exceeds the table budget");
        let mut left = k;
        self.choice
            .iter()
            .map(|row| {
                let m = row[left];
                left -= m;
                m
            })
            .collect()
    }

    /// Backtracks the optimal `k`-edge set. Edges come node by node, most
    /// probable first; the trace follows that order.
    pub fn select(&self, matrix: &TransitionMatrix, k: usize) -> Result<EdgeSelection> {
        check_budget(k, self.budget, "edges in the table budget")?;
        let mut edges = Vec::with_capacity(k);
        let mut trace = Vec::with_capacity(k);
        let mut total = self.baseline;
        for (u, m) in self.allocation(k).into_iter().enumerate() {
            for j in 1..=m {
                let e = self.sorted[u][j - 1];
                edges.push(Edge::new(u, matrix.edge_target(e)));
                total += self.isol[u][j] - self.isol[u][j - 1];
                trace.push(total.max(0.0));
            }
        }
        Ok(EdgeSelection {
            edges,
            objective_trace: trace,
            baseline: self.baseline,
        })
    }
}

/// Optimal EdgeTransitions selection with `k` edges.
pub fn edge_dp(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k: usize,
) -> Result<EdgeSelection> {
    DpTable::build(matrix, items, k)?.select(matrix, k)
}

#[cfg(test)]
mod tests {
    use super::*;
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
        let sel = edge_dp(&p, &x, 0).unwrap();
        assert!(sel.edges.is_empty());
        assert_abs_diff_eq!(sel.objective(), 0.62, epsilon = 1e-12);

        let sel = edge_dp(&p, &x, 1).unwrap();
        assert_eq!(sel.edges, vec![Edge::new(0, 1)]);
        assert_abs_diff_eq!(sel.objective(), 0.24, epsilon = 1e-12);

        let sel = edge_dp(&p, &x, 3).unwrap();
        assert_eq!(
            sel.edges,
            vec![Edge::new(0, 1), Edge::new(0, 2), Edge::new(0, 3)]
        );
        assert_eq!(sel.objective(), 0.0);
        assert!(edge_dp(&p, &x, 7).is_err());
    }

    #[test]
    fn tables_are_monotone() {
        let (p, x) = star();
        let t = DpTable::build(&p, &x, 6).unwrap();
        assert_abs_diff_eq!(t.optimum(0), 0.62, epsilon = 1e-12);
        for u in 0..4 {
            assert!(t.isol(u).windows(2).all(|w| w[1] <= w[0] + 1e-15));
        }
        for k in 1..=6 {
            assert!(t.optimum(k) <= t.optimum(k - 1) + 1e-15);
        }
        assert_eq!(t.allocation(6).iter().sum::<usize>(), 6);
    }

    #[test]
    fn equal_probabilities_give_equal_isol() {
        let p = TransitionMatrix::uniform(vec![vec![0, 1, 2, 3], vec![], vec![], vec![]]).unwrap();
        let x = ItemDistribution::new(vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        let t = DpTable::build(&p, &x, 3).unwrap();
        // x(d - m - 1)/d for uniform rows of degree d
        for (m, v) in t.isol(0).iter().enumerate() {
            assert_abs_diff_eq!(*v, 4.0 * (3.0 - m as f64) / 4.0, epsilon = 1e-12);
        }
    }
}
