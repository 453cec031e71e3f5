//! Named selection algorithms and the budget sweeps that compare them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, RankedList};
use crate::chain::{
    check_dims, f0_unchecked, Edge, EdgeSelection, ItemDistribution, NodeObjective, NodeSelection,
    TransitionMatrix, UncertaintyReport,
};
use crate::error::{Error, Result};
use crate::ingest::ReportRow;
use crate::selection::{self, DpTable};

/// Which operation the selected set is scored under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// ParentTransitions / NodeItems on nodes.
    Node,
    /// EdgeTransitions on edges.
    Edge,
    /// ChildrenTransitions on nodes.
    Children,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Node => "node",
            Variant::Edge => "edge",
            Variant::Children => "children",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Variant::Node, Variant::Edge, Variant::Children]
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    NodeGreedy,
    NodeGreedyNaive,
    ChildrenTopk,
    InDegree,
    InProbability,
    NodeBetweenness,
    Closeness,
    NodeNumItems,
    RandomNodes,
    EdgeGreedy,
    EdgeDp,
    EdgeBetweenness,
    EdgeNumItems,
    EdgeProbability,
    RandomEdges,
}

impl Algorithm {
    pub const ALL: [Algorithm; 15] = [
        Algorithm::NodeGreedy,
        Algorithm::NodeGreedyNaive,
        Algorithm::ChildrenTopk,
        Algorithm::InDegree,
        Algorithm::InProbability,
        Algorithm::NodeBetweenness,
        Algorithm::Closeness,
        Algorithm::NodeNumItems,
        Algorithm::RandomNodes,
        Algorithm::EdgeGreedy,
        Algorithm::EdgeDp,
        Algorithm::EdgeBetweenness,
        Algorithm::EdgeNumItems,
        Algorithm::EdgeProbability,
        Algorithm::RandomEdges,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NodeGreedy => "node-greedy",
            Algorithm::NodeGreedyNaive => "node-greedy-naive",
            Algorithm::ChildrenTopk => "children-topk",
            Algorithm::InDegree => "in-degree",
            Algorithm::InProbability => "in-probability",
            Algorithm::NodeBetweenness => "node-betweenness",
            Algorithm::Closeness => "closeness",
            Algorithm::NodeNumItems => "node-num-items",
            Algorithm::RandomNodes => "random-nodes",
            Algorithm::EdgeGreedy => "edge-greedy",
            Algorithm::EdgeDp => "edge-dp",
            Algorithm::EdgeBetweenness => "edge-betweenness",
            Algorithm::EdgeNumItems => "edge-num-items",
            Algorithm::EdgeProbability => "edge-probability",
            Algorithm::RandomEdges => "random-edges",
        }
    }

    pub fn selects_edges(self) -> bool {
        matches!(
            self,
            Algorithm::EdgeGreedy
                | Algorithm::EdgeDp
                | Algorithm::EdgeBetweenness
                | Algorithm::EdgeNumItems
                | Algorithm::EdgeProbability
                | Algorithm::RandomEdges
        )
    }

    /// Variant used when none is requested explicitly.
    pub fn default_variant(self) -> Variant {
        match self {
            Algorithm::ChildrenTopk => Variant::Children,
            a if a.selects_edges() => Variant::Edge,
            _ => Variant::Node,
        }
    }

    /// Edge algorithms only score edges; the greedy node selectors and
    /// children-topk are tied to their own objective; node rankers can be
    /// scored under either node objective.
    pub fn supports(self, variant: Variant) -> bool {
        match self {
            Algorithm::NodeGreedy | Algorithm::NodeGreedyNaive => variant == Variant::Node,
            Algorithm::ChildrenTopk => variant == Variant::Children,
            a if a.selects_edges() => variant == Variant::Edge,
            _ => variant != Variant::Edge,
        }
    }

    /// Baselines ranked independently of the objective.
    pub fn is_baseline(self) -> bool {
        !matches!(
            self,
            Algorithm::NodeGreedy
                | Algorithm::NodeGreedyNaive
                | Algorithm::ChildrenTopk
                | Algorithm::EdgeGreedy
                | Algorithm::EdgeDp
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Picks {
    Nodes(Vec<usize>),
    Edges(Vec<Edge>),
}

/// Selection order with the objective after each pick.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionOutcome {
    pub picks: Picks,
    pub trace: Vec<f64>,
    pub baseline: f64,
}

impl SelectionOutcome {
    pub fn labels(&self) -> Vec<String> {
        match &self.picks {
            Picks::Nodes(v) => v.iter().map(|u| u.to_string()).collect(),
            Picks::Edges(e) => e.iter().map(|e| e.to_string()).collect(),
        }
    }

    pub fn objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(self.baseline)
    }

    pub fn report(&self) -> UncertaintyReport {
        UncertaintyReport::new(self.baseline, self.objective())
    }
}

impl From<NodeSelection> for SelectionOutcome {
    fn from(s: NodeSelection) -> Self {
        SelectionOutcome {
            picks: Picks::Nodes(s.nodes),
            trace: s.objective_trace,
            baseline: s.baseline,
        }
    }
}

impl From<EdgeSelection> for SelectionOutcome {
    fn from(s: EdgeSelection) -> Self {
        SelectionOutcome {
            picks: Picks::Edges(s.edges),
            trace: s.objective_trace,
            baseline: s.baseline,
        }
    }
}

fn node_objective(variant: Variant) -> NodeObjective {
    if variant == Variant::Children {
        NodeObjective::Children
    } else {
        NodeObjective::Parents
    }
}

fn top_nodes(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    ranked: RankedList<usize>,
    k: usize,
    variant: Variant,
) -> Result<SelectionOutcome> {
    selection::check_budget(k, matrix.n(), "nodes")?;
    Ok(NodeSelection::evaluate(matrix, items, ranked.top(k), node_objective(variant))?.into())
}

fn top_edges(
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    ranked: RankedList<Edge>,
    k: usize,
) -> Result<SelectionOutcome> {
    selection::check_budget(k, matrix.edge_count(), "edges")?;
    Ok(EdgeSelection::evaluate(matrix, items, ranked.top(k))?.into())
}

/// Runs `algorithm` with budget `k`, scoring every prefix under `variant`.
/// `seed` only affects the random baselines.
pub fn run_selection(
    algorithm: Algorithm,
    variant: Variant,
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k: usize,
    seed: u64,
) -> Result<SelectionOutcome> {
    check_dims(matrix, items)?;
    if !algorithm.supports(variant) {
        return Err(Error::InvalidConfig(format!(
            "{algorithm} cannot be scored as a {variant} selection"
        )));
    }
    let objective = node_objective(variant);
    Ok(match algorithm {
        Algorithm::NodeGreedy => selection::node_greedy(matrix, items, k)?.into(),
        Algorithm::NodeGreedyNaive => selection::node_greedy_naive(matrix, items, k)?.into(),
        Algorithm::ChildrenTopk => selection::children_topk(matrix, items, k)?.into(),
        Algorithm::InDegree => top_nodes(matrix, items, baselines::in_degree(matrix), k, variant)?,
        Algorithm::InProbability => {
            top_nodes(matrix, items, baselines::in_probability(matrix), k, variant)?
        }
        Algorithm::NodeBetweenness => top_nodes(
            matrix,
            items,
            baselines::node_betweenness(matrix),
            k,
            variant,
        )?,
        Algorithm::Closeness => top_nodes(matrix, items, baselines::closeness(matrix), k, variant)?,
        Algorithm::NodeNumItems => top_nodes(
            matrix,
            items,
            baselines::node_num_items(matrix, items)?,
            k,
            variant,
        )?,
        Algorithm::RandomNodes => {
            let nodes = baselines::random_nodes(matrix, k, seed)?;
            NodeSelection::evaluate(matrix, items, &nodes, objective)?.into()
        }
        Algorithm::EdgeGreedy => selection::edge_greedy(matrix, items, k)?.into(),
        Algorithm::EdgeDp => selection::edge_dp(matrix, items, k)?.into(),
        Algorithm::EdgeBetweenness => {
            top_edges(matrix, items, baselines::edge_betweenness(matrix), k)?
        }
        Algorithm::EdgeNumItems => {
            top_edges(matrix, items, baselines::edge_num_items(matrix, items)?, k)?
        }
        Algorithm::EdgeProbability => {
            top_edges(matrix, items, baselines::edge_probability(matrix), k)?
        }
        Algorithm::RandomEdges => {
            let edges = baselines::random_edges(matrix, k, seed)?;
            EdgeSelection::evaluate(matrix, items, &edges)?.into()
        }
    })
}

/// Objective for every budget `0..=k_max`. Prefix selectors run once at
/// `k_max`; the dynamic program reads each optimum off one table.
pub fn objective_curve(
    algorithm: Algorithm,
    variant: Variant,
    matrix: &TransitionMatrix,
    items: &ItemDistribution,
    k_max: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if algorithm == Algorithm::EdgeDp {
        check_dims(matrix, items)?;
        let table = DpTable::build(matrix, items, k_max)?;
        // Accumulate from F0 like the other selectors so k = 0 is exact.
        return (0..=k_max)
            .map(|k| Ok(table.select(matrix, k)?.objective()))
            .collect();
    }
    let run = run_selection(algorithm, variant, matrix, items, k_max, seed)?;
    let mut curve = Vec::with_capacity(k_max + 1);
    curve.push(run.baseline);
    curve.extend(run.trace);
    Ok(curve)
}

/// A named chain and item placement.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: String,
    pub distribution: String,
    pub matrix: TransitionMatrix,
    pub items: ItemDistribution,
}

/// Every `(instance, algorithm, k)` cell, each algorithm scored under its
/// default variant. Rows come back sorted by graph, distribution,
/// algorithm name and `k`.
pub fn run_experiment(
    instances: &[Instance],
    algorithms: &[Algorithm],
    ks: &[usize],
    seed: u64,
) -> Result<Vec<ReportRow>> {
    let Some(&k_max) = ks.iter().max() else {
        return Ok(Vec::new());
    };
    let cells: Vec<(&Instance, Algorithm)> = instances
        .iter()
        .flat_map(|inst| algorithms.iter().map(move |&a| (inst, a)))
        .collect();
    let curves: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(inst, alg)| {
            objective_curve(
                alg,
                alg.default_variant(),
                &inst.matrix,
                &inst.items,
                k_max,
                seed,
            )
            .map_err(|e| {
                Error::InvalidConfig(format!(
                    "{alg} on {}/{}: {e}",
                    inst.graph, inst.distribution
                ))
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cells.len() * ks.len());
    for ((inst, alg), curve) in cells.iter().zip(&curves) {
        let f0 = f0_unchecked(&inst.matrix, inst.items.as_slice());
        for &k in ks {
            let report = UncertaintyReport::new(f0, curve[k]);
            rows.push(ReportRow {
                graph: inst.graph.clone(),
                distribution: inst.distribution.clone(),
                algorithm: alg.name().to_owned(),
                k,
                objective: report.f_sel,
                ratio: report.ratio,
            });
        }
    }
    rows.sort_by(|a, b| {
        (&a.graph, &a.distribution, &a.algorithm, a.k).cmp(&(
            &b.graph,
            &b.distribution,
            &b.algorithm,
            b.k,
        ))
    });
    rows.dedup();
    Ok(rows)
}
