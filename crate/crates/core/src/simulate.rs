//! Sampling and enumeration oracles for the closed-form functionals.
//!
//! Items are whole units here: each node `u` sends its `x(u)` items along its
//! row as one multinomial draw.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{
    edge_indices, node_mask, Edge, ItemDistribution, TransitionMatrix, RESIDUAL_EPSILON,
};
use crate::error::{Error, Result};

/// Trials per independently seeded chunk of a Monte Carlo run.
pub const MC_CHUNK: usize = 4096;

/// Default bound on the outcomes an exhaustive run may enumerate.
pub const EXHAUSTIVE_CAP: u128 = 100_000;

/// Realised per-edge counts of one transition step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionOutcome {
    /// `n_uv` by global edge index.
    pub counts: Vec<u64>,
    /// `n_v = Σ_u n_uv`.
    pub node_totals: Vec<u64>,
}

/// Kind of monitoring query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpType {
    #[serde(rename = "PT")]
    ParentTransitions,
    #[serde(rename = "NI")]
    NodeItems,
    #[serde(rename = "ET")]
    EdgeTransitions,
    #[serde(rename = "CT")]
    ChildrenTransitions,
}

impl OpType {
    pub const ALL: [OpType; 4] = [
        OpType::ParentTransitions,
        OpType::NodeItems,
        OpType::EdgeTransitions,
        OpType::ChildrenTransitions,
    ];

    pub fn code(self) -> &'static str {
        match self {
            OpType::ParentTransitions => "PT",
            OpType::NodeItems => "NI",
            OpType::EdgeTransitions => "ET",
            OpType::ChildrenTransitions => "CT",
        }
    }
}

impl fmt::Display for OpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for OpType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OpType::ALL
            .into_iter()
            .find(|o| o.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown operation `{s}`")))
    }
}

/// What is being monitored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Monitor {
    Nodes(Vec<usize>),
    Edges(Vec<Edge>),
}

/// Sample mean of a Monte Carlo run and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

fn check_counts(matrix: &TransitionMatrix, counts: &[u64]) -> Result<()> {
    if counts.len() != matrix.n() {
        return Err(Error::DimensionMismatch {
            nodes: matrix.n(),
            items: counts.len(),
        });
    }
    Ok(())
}

fn sample_into(matrix: &TransitionMatrix, counts: &[u64], rng: &mut ChaCha8Rng, out: &mut [u64]) {
    for (u, &x) in counts.iter().enumerate() {
        let row = matrix.row_range(u);
        let last = row.end - 1;
        let mut left = x;
        let mut mass = 1.0;
        for e in row {
            let p = matrix.edge_prob(e);
            let k = if e == last || left == 0 {
                left
            } else {
                let q = (p / mass).clamp(0.0, 1.0);
                Binomial::new(left, q).expect("valid binomial").sample(rng)
            };
            out[e] = k;
            left -= k;
            mass -= p;
        }
    }
}

fn totals(matrix: &TransitionMatrix, edge_counts: &[u64]) -> Vec<u64> {
    let mut z = vec![0; matrix.n()];
    for (e, &c) in edge_counts.iter().enumerate() {
        z[matrix.edge_target(e)] += c;
    }
    z
}

/// One transition step drawn by sequential binomial splits along each row.
pub fn sample_transition(
    matrix: &TransitionMatrix,
    counts: &[u64],
    seed: u64,
) -> Result<TransitionOutcome> {
    check_counts(matrix, counts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edge_counts = vec![0; matrix.edge_count()];
    sample_into(matrix, counts, &mut rng, &mut edge_counts);
    Ok(TransitionOutcome {
        node_totals: totals(matrix, &edge_counts),
        counts: edge_counts,
    })
}

/// Edge mask of what a query reveals, for the edge-level answers.
fn revealed_edges(matrix: &TransitionMatrix, monitor: &Monitor, op: OpType) -> Result<Vec<bool>> {
    let mut mask = vec![false; matrix.edge_count()];
    match (op, monitor) {
        (OpType::ParentTransitions | OpType::NodeItems, Monitor::Nodes(nodes)) => {
            node_mask(matrix.n(), nodes)?;
            for &v in nodes {
                for (_, _, e) in matrix.parents(v) {
                    mask[e] = true;
                }
            }
        }
        (OpType::ChildrenTransitions, Monitor::Nodes(nodes)) => {
            node_mask(matrix.n(), nodes)?;
            for &u in nodes {
                matrix.row_range(u).for_each(|e| mask[e] = true);
            }
        }
        (OpType::EdgeTransitions, Monitor::Edges(edges)) => {
            for e in edge_indices(matrix, edges)? {
                mask[e] = true;
            }
        }
        (op, _) => {
            return Err(Error::Unsupported(format!(
                "{op} queries need a {} selection",
                if op == OpType::EdgeTransitions {
                    "edge"
                } else {
                    "node"
                }
            )))
        }
    }
    Ok(mask)
}

/// For each source node, the conditional variance each hidden item adds:
/// `Σ q(1 - q)` over its unrevealed edges with `q = P / (1 - ρ)`.
fn hidden_spread(matrix: &TransitionMatrix, revealed: &[bool]) -> Vec<f64> {
    (0..matrix.n())
        .map(|u| {
            let r = matrix.row_range(u);
            let rho: f64 = r
                .clone()
                .filter(|&e| revealed[e])
                .map(|e| matrix.edge_prob(e))
                .sum();
            let rest = 1.0 - rho;
            if rest < RESIDUAL_EPSILON {
                return 0.0;
            }
            r.filter(|&e| !revealed[e])
                .map(|e| {
                    let q = matrix.edge_prob(e) / rest;
                    q * (1.0 - q)
                })
                .sum()
        })
        .collect()
}

#[derive(Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

/// Monte Carlo estimate of the expected remaining uncertainty.
///
/// Each trial draws a transition, reads off the answer, and adds up the
/// exact conditional variance of the hidden remainder: the items of `u` not
/// seen on revealed edges are spread multinomially over the hidden ones.
/// Trials run in chunks of [`MC_CHUNK`], chunk `c` on ChaCha8 stream `c` of
/// `seed`, merged in chunk order, so the result is independent of the number
/// of worker threads. NodeItems has no per-answer closed form and is
/// rejected; use [`exhaustive_expected_uncertainty`].
pub fn mc_expected_uncertainty(
    matrix: &TransitionMatrix,
    counts: &[u64],
    monitor: &Monitor,
    op: OpType,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_counts(matrix, counts)?;
    if op == OpType::NodeItems {
        return Err(Error::Unsupported(
            "NI has no per-answer closed form; use the exhaustive oracle".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is needed".into()));
    }
    let revealed = revealed_edges(matrix, monitor, op)?;
    let spread = hidden_spread(matrix, &revealed);
    let chunks = trials.div_ceil(MC_CHUNK);
    let stats: Vec<Welford> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut buf = vec![0; matrix.edge_count()];
            let mut acc = Welford::default();
            for _ in 0..MC_CHUNK.min(trials - c * MC_CHUNK) {
                sample_into(matrix, counts, &mut rng, &mut buf);
                let value: f64 = (0..matrix.n())
                    .filter(|&u| spread[u] > 0.0)
                    .map(|u| {
                        let seen: u64 = matrix
                            .row_range(u)
                            .filter(|&e| revealed[e])
                            .map(|e| buf[e])
                            .sum();
                        (counts[u] - seen) as f64 * spread[u]
                    })
                    .sum();
                acc.push(value);
            }
            acc
        })
        .collect();
    let total = stats.into_iter().fold(Welford::default(), Welford::merge);
    let stderr = if total.n > 1 {
        (total.m2 / (total.n - 1) as f64 / total.n as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean: total.mean,
        stderr,
        trials: total.n,
    })
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |c, i| c * (n - i) as u128 / (i + 1) as u128)
}

/// All splits of `total` items over `parts` slots with their multinomial
/// probabilities under `probs`.
fn compositions(total: u64, probs: &[f64]) -> Vec<(Vec<u64>, f64)> {
    fn rec(
        left: u64,
        i: usize,
        probs: &[f64],
        cur: &mut Vec<u64>,
        weight: f64,
        out: &mut Vec<(Vec<u64>, f64)>,
    ) {
        if i + 1 == probs.len() {
            cur.push(left);
            out.push((cur.clone(), weight * probs[i].powi(left as i32)));
            cur.pop();
            return;
        }
        for k in 0..=left {
            // Multinomial coefficient built as a product of binomials.
            let w = weight * binomial(left, k) as f64 * probs[i].powi(k as i32);
            cur.push(k);
            rec(left - k, i + 1, probs, cur, w, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(
        total,
        0,
        probs,
        &mut Vec::with_capacity(probs.len()),
        1.0,
        &mut out,
    );
    out
}

#[derive(Default)]
struct Group {
    outcomes: Vec<(f64, Vec<u64>)>,
}

/// Exact `E[var(Z(v) | A)]` for every node `v`, by enumerating every
/// transition outcome. Outcomes are grouped by the answer `A`: the revealed
/// edge counts, or the monitored node totals for NodeItems.
pub fn exhaustive_node_variances(
    matrix: &TransitionMatrix,
    counts: &[u64],
    monitor: &Monitor,
    op: OpType,
    cap: u128,
) -> Result<Vec<f64>> {
    check_counts(matrix, counts)?;
    let revealed = revealed_edges(matrix, monitor, op)?;
    let mut support: u128 = 1;
    for (u, &x) in counts.iter().enumerate() {
        let d = matrix.out_degree(u) as u64;
        support = support.saturating_mul(binomial(x + d - 1, d - 1));
        if support > cap {
            return Err(Error::CapExceeded {
                needed: support,
                cap,
            });
        }
    }

    let per_node: Vec<Vec<(Vec<u64>, f64)>> = (0..matrix.n())
        .map(|u| {
            let probs: Vec<f64> = matrix.row_range(u).map(|e| matrix.edge_prob(e)).collect();
            compositions(counts[u], &probs)
        })
        .collect();

    let key_nodes: Vec<usize> = match (op, monitor) {
        (OpType::NodeItems, Monitor::Nodes(nodes)) => {
            let mut s = nodes.clone();
            s.sort_unstable();
            s
        }
        _ => Vec::new(),
    };
    let key_edges: Vec<usize> = (0..matrix.edge_count()).filter(|&e| revealed[e]).collect();

    let mut groups: BTreeMap<Vec<u64>, Group> = BTreeMap::new();
    let mut choice = vec![0usize; matrix.n()];
    let mut edge_counts = vec![0u64; matrix.edge_count()];
    'outer: loop {
        let mut prob = 1.0;
        for u in 0..matrix.n() {
            let (split, p) = &per_node[u][choice[u]];
            prob *= p;
            for (e, &c) in matrix.row_range(u).zip(split) {
                edge_counts[e] = c;
            }
        }
        let z = totals(matrix, &edge_counts);
        let key: Vec<u64> = if op == OpType::NodeItems {
            key_nodes.iter().map(|&v| z[v]).collect()
        } else {
            key_edges.iter().map(|&e| edge_counts[e]).collect()
        };
        groups.entry(key).or_default().outcomes.push((prob, z));

        for u in 0..matrix.n() {
            choice[u] += 1;
            if choice[u] < per_node[u].len() {
                continue 'outer;
            }
            choice[u] = 0;
        }
        break;
    }

    let mut variances = vec![0.0; matrix.n()];
    for group in groups.values() {
        let mass: f64 = group.outcomes.iter().map(|o| o.0).sum();
        if mass == 0.0 {
            continue;
        }
        for (v, var) in variances.iter_mut().enumerate() {
            let mean = group
                .outcomes
                .iter()
                .map(|(p, z)| p * z[v] as f64)
                .sum::<f64>()
                / mass;
            *var += group
                .outcomes
                .iter()
                .map(|(p, z)| {
                    let d = z[v] as f64 - mean;
                    p * d * d
                })
                .sum::<f64>();
        }
    }
    Ok(variances)
}

/// Exact expected uncertainty `E[Σ_v var(Z(v) | A)]` by enumeration, capped
/// at [`EXHAUSTIVE_CAP`] outcomes.
pub fn exhaustive_expected_uncertainty(
    matrix: &TransitionMatrix,
    counts: &[u64],
    monitor: &Monitor,
    op: OpType,
) -> Result<f64> {
    Ok(
        exhaustive_node_variances(matrix, counts, monitor, op, EXHAUSTIVE_CAP)?
            .into_iter()
            .sum(),
    )
}

/// The closed-form functional matching `op`.
pub fn closed_form(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    monitor: &Monitor,
    op: OpType,
) -> Result<f64> {
    use crate::chain::{uncertainty_children, uncertainty_edge, uncertainty_node};
    match (op, monitor) {
        (OpType::ParentTransitions | OpType::NodeItems, Monitor::Nodes(s)) => {
            uncertainty_node(matrix, items, s)
        }
        (OpType::ChildrenTransitions, Monitor::Nodes(s)) => uncertainty_children(matrix, items, s),
        (OpType::EdgeTransitions, Monitor::Edges(d)) => uncertainty_edge(matrix, items, d),
        _ => Err(Error::Unsupported(format!(
            "{op} does not apply to this selection"
        ))),
    }
}
