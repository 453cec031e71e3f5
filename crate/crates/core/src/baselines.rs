//! Comparison rankers. Each scores every node (or edge) independently and
//! the top-k prefix of the ranking is the baseline's k-selection.
//!
//! Path-based centralities use unweighted hop distances on the directed
//! graph of the chain and skip self-loops.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{check_dims, Edge, ItemDistribution, TransitionMatrix};
use crate::error::Result;
use crate::selection::check_budget;

/// Sources per work unit in the all-sources searches. Fixed so the
/// floating-point reduction order does not depend on the thread count.
const SOURCES_PER_CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct RankedList<T> {
    pub ids: Vec<T>,
    pub scores: Vec<f64>,
}

impl<T: Ord + Copy> RankedList<T> {
    /// Sorts by descending score, ties by ascending id.
    pub fn from_scores(mut scored: Vec<(T, f64)>) -> Self {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let (ids, scores) = scored.into_iter().unzip();
        RankedList { ids, scores }
    }

    pub fn top(&self, k: usize) -> &[T] {
        &self.ids[..k.min(self.ids.len())]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn rank_nodes(scores: Vec<f64>) -> RankedList<usize> {
    RankedList::from_scores(scores.into_iter().enumerate().collect())
}

fn rank_edges(matrix: &TransitionMatrix, scores: Vec<f64>) -> RankedList<Edge> {
    RankedList::from_scores(matrix.edges().map(|(e, _)| e).zip(scores).collect())
}

pub fn in_degree(matrix: &TransitionMatrix) -> RankedList<usize> {
    rank_nodes(
        (0..matrix.n())
            .map(|v| matrix.in_degree(v) as f64)
            .collect(),
    )
}

pub fn in_probability(matrix: &TransitionMatrix) -> RankedList<usize> {
    rank_nodes(
        (0..matrix.n())
            .map(|v| matrix.parents(v).map(|(_, p, _)| p).sum())
            .collect(),
    )
}

pub fn node_num_items(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
) -> Result<RankedList<usize>> {
    check_dims(matrix, items)?;
    Ok(rank_nodes(items.as_slice().to_vec()))
}

/// Expected number of items crossing each edge, `x(u) P(u,v)`.
pub fn edge_num_items(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
) -> Result<RankedList<Edge>> {
    check_dims(matrix, items)?;
    let x = items.as_slice();
    Ok(rank_edges(
        matrix,
        matrix.edges().map(|(e, p)| x[e.from] * p).collect(),
    ))
}

pub fn edge_probability(matrix: &TransitionMatrix) -> RankedList<Edge> {
    rank_edges(matrix, matrix.edges().map(|(_, p)| p).collect())
}

/// Single-source shortest-path DAG in BFS order.
struct Bfs {
    order: Vec<usize>,
    sigma: Vec<f64>,
    dist: Vec<usize>,
    /// `(predecessor, edge index)` pairs per node.
    preds: Vec<Vec<(usize, usize)>>,
}

impl Bfs {
    fn new(n: usize) -> Self {
        Bfs {
            order: Vec::with_capacity(n),
            sigma: vec![0.0; n],
            dist: vec![usize::MAX; n],
            preds: vec![Vec::new(); n],
        }
    }

    fn run(&mut self, matrix: &TransitionMatrix, s: usize) {
        for &v in &self.order {
            self.sigma[v] = 0.0;
            self.dist[v] = usize::MAX;
            self.preds[v].clear();
        }
        self.order.clear();
        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            self.order.push(v);
            for e in matrix.row_range(v) {
                let w = matrix.edge_target(e);
                if w == v {
                    continue;
                }
                if self.dist[w] == usize::MAX {
                    self.dist[w] = self.dist[v] + 1;
                    queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push((v, e));
                }
            }
        }
    }
}

/// Brandes accumulation over all sources; returns `(node scores, edge scores)`.
fn brandes(matrix: &TransitionMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = matrix.n();
    let m = matrix.edge_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_chunks(SOURCES_PER_CHUNK)
        .map(|chunk| {
            let mut node_bc = vec![0.0; n];
            let mut edge_bc = vec![0.0; m];
            let mut bfs = Bfs::new(n);
            let mut delta = vec![0.0; n];
            for &s in chunk {
                bfs.run(matrix, s);
                for &w in bfs.order.iter().rev() {
                    for &(v, e) in &bfs.preds[w] {
                        let c = bfs.sigma[v] / bfs.sigma[w] * (1.0 + delta[w]);
                        edge_bc[e] += c;
                        delta[v] += c;
                    }
                    if w != s {
                        node_bc[w] += delta[w];
                    }
                }
                for &w in &bfs.order {
                    delta[w] = 0.0;
                }
            }
            (node_bc, edge_bc)
        })
        .collect();
    let mut node_bc = vec![0.0; n];
    let mut edge_bc = vec![0.0; m];
    for (nb, eb) in partials {
        node_bc.iter_mut().zip(nb).for_each(|(a, b)| *a += b);
        edge_bc.iter_mut().zip(eb).for_each(|(a, b)| *a += b);
    }
    (node_bc, edge_bc)
}

/// Raw (unnormalised) directed betweenness of every node.
pub fn node_betweenness_scores(matrix: &TransitionMatrix) -> Vec<f64> {
    brandes(matrix).0
}

/// Raw directed betweenness of every edge, indexed like `matrix.edges()`.
pub fn edge_betweenness_scores(matrix: &TransitionMatrix) -> Vec<f64> {
    brandes(matrix).1
}

pub fn node_betweenness(matrix: &TransitionMatrix) -> RankedList<usize> {
    rank_nodes(node_betweenness_scores(matrix))
}

pub fn edge_betweenness(matrix: &TransitionMatrix) -> RankedList<Edge> {
    rank_edges(matrix, edge_betweenness_scores(matrix))
}

/// Closeness over out-distances. When every node reaches every other this
/// is `1 / Σ_u d(v,u)`; otherwise all nodes are scored with the harmonic
/// form `Σ_u 1 / d(v,u)` over reachable `u`, so unreachable pairs add zero.
pub fn closeness_scores(matrix: &TransitionMatrix) -> Vec<f64> {
    let n = matrix.n();
    let sources: Vec<usize> = (0..n).collect();
    // (distance sum, harmonic sum, reached count) per source
    let per_node: Vec<(f64, f64, usize)> = sources
        .par_chunks(SOURCES_PER_CHUNK)
        .flat_map_iter(|chunk| {
            let mut bfs = Bfs::new(n);
            chunk
                .iter()
                .map(|&s| {
                    bfs.run(matrix, s);
                    let mut total = 0.0;
                    let mut harmonic = 0.0;
                    for &v in &bfs.order[1..] {
                        let d = bfs.dist[v] as f64;
                        total += d;
                        harmonic += 1.0 / d;
                    }
                    (total, harmonic, bfs.order.len() - 1)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let strongly_connected = per_node.iter().all(|&(_, _, r)| r == n - 1);
    per_node
        .into_iter()
        .map(|(total, harmonic, _)| {
            if strongly_connected {
                if total > 0.0 {
                    1.0 / total
                } else {
                    0.0
                }
            } else {
                harmonic
            }
        })
        .collect()
}

pub fn closeness(matrix: &TransitionMatrix) -> RankedList<usize> {
    rank_nodes(closeness_scores(matrix))
}

/// `k` distinct nodes drawn uniformly, deterministic in `seed`.
pub fn random_nodes(matrix: &TransitionMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_budget(k, matrix.n(), "nodes")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, matrix.n(), k).into_vec())
}

/// `k` distinct edges drawn uniformly, deterministic in `seed`.
pub fn random_edges(matrix: &TransitionMatrix, k: usize, seed: u64) -> Result<Vec<Edge>> {
    check_budget(k, matrix.edge_count(), "edges")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, matrix.edge_count(), k)
        .into_iter()
        .map(|e| matrix.edge(e).0)
        .collect())
}
