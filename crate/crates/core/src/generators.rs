//! Synthetic chains (grid, random geometric, preferential attachment) and
//! item-placement schemes. All synthetic chains use uniform probabilities
//! over each node's out-edges.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{ItemDistribution, TransitionMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_ITEMS_PER_NODE: f64 = 10.0;
pub const DEFAULT_EGO_FRACTION: f64 = 0.7;
pub const DEFAULT_GEO_THRESHOLD: f64 = 0.01;

/// Upper bound on buckets per axis in the geometric neighbour search.
const MAX_GEO_CELLS: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSpec {
    Grid { rows: usize, cols: usize },
    Geo { n: usize, threshold: f64 },
    Ba { n: usize, m: usize },
}

impl GraphSpec {
    pub fn node_count(&self) -> usize {
        match *self {
            GraphSpec::Grid { rows, cols } => rows * cols,
            GraphSpec::Geo { n, .. } | GraphSpec::Ba { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match *self {
            GraphSpec::Grid { rows, cols } if rows == 0 || cols == 0 => bad(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )),
            GraphSpec::Geo { n: 0, .. } => bad("geo graph needs n >= 1".into()),
            GraphSpec::Geo { threshold, .. } if !(threshold > 0.0 && threshold.is_finite()) => {
                bad(format!("geo threshold must be positive, got {threshold}"))
            }
            GraphSpec::Ba { m: 0, .. } => bad("ba graph needs m >= 1".into()),
            GraphSpec::Ba { n, m } if n <= m => {
                bad(format!("ba graph needs n > m, got n={n} m={m}"))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, seed: u64) -> Result<TransitionMatrix> {
        self.validate()?;
        match *self {
            GraphSpec::Grid { rows, cols } => grid_graph(rows, cols),
            GraphSpec::Geo { n, threshold } => geo_graph(n, threshold, seed),
            GraphSpec::Ba { n, m } => ba_graph(n, m, seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionScheme {
    Ego,
    Uniform,
    Direct,
    Inverse,
}

impl DistributionScheme {
    pub const ALL: [DistributionScheme; 4] = [
        DistributionScheme::Ego,
        DistributionScheme::Uniform,
        DistributionScheme::Direct,
        DistributionScheme::Inverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionScheme::Ego => "ego",
            DistributionScheme::Uniform => "uniform",
            DistributionScheme::Direct => "direct",
            DistributionScheme::Inverse => "inverse",
        }
    }
}

impl fmt::Display for DistributionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistributionScheme::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown distribution `{s}`")))
    }
}

/// Full recipe for a synthetic instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub graph: GraphSpec,
    pub seed: u64,
    pub total_items: f64,
    pub distribution: DistributionScheme,
    pub ego_fraction: f64,
}

impl GenConfig {
    /// Defaults: 10 items per node, 70% of Ego items in the hub neighbourhood.
    pub fn new(graph: GraphSpec, distribution: DistributionScheme, seed: u64) -> Self {
        let total_items = DEFAULT_ITEMS_PER_NODE * graph.node_count() as f64;
        GenConfig {
            graph,
            seed,
            total_items,
            distribution,
            ego_fraction: DEFAULT_EGO_FRACTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if !(self.total_items > 0.0 && self.total_items.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "total_items must be positive, got {}",
                self.total_items
            )));
        }
        if !(self.ego_fraction > 0.0 && self.ego_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "ego_fraction must lie in (0, 1), got {}",
                self.ego_fraction
            )));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<(TransitionMatrix, ItemDistribution)> {
        self.validate()?;
        let matrix = self.graph.build(self.seed)?;
        let items = distribute(
            &matrix,
            self.distribution,
            self.total_items,
            self.ego_fraction,
            self.seed,
        )?;
        Ok((matrix, items))
    }
}

/// Bidirected `rows x cols` lattice with 4-neighbourhoods; row-major ids.
pub fn grid_graph(rows: usize, cols: usize) -> Result<TransitionMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig(format!(
            "grid dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let adjacency = (0..rows * cols)
        .map(|u| {
            let (r, c) = (u / cols, u % cols);
            let mut out = Vec::with_capacity(4);
            if r > 0 {
                out.push(id(r - 1, c));
            }
            if c > 0 {
                out.push(id(r, c - 1));
            }
            if c + 1 < cols {
                out.push(id(r, c + 1));
            }
            if r + 1 < rows {
                out.push(id(r + 1, c));
            }
            out
        })
        .collect();
    TransitionMatrix::uniform(adjacency)
}

/// Uniform points in the unit square, the placement step of [`geo_graph`].
pub fn geo_points(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect()
}

/// Random geometric graph: both directions between points closer than
/// `threshold`. Isolated points get self-loops.
pub fn geo_graph(n: usize, threshold: f64, seed: u64) -> Result<TransitionMatrix> {
    if n == 0 {
        return Err(Error::InvalidConfig("geo graph needs n >= 1".into()));
    }
    let points = geo_points(n, seed);
    let mut adjacency = vec![Vec::new(); n];
    if threshold > 0.0 {
        let cells = ((1.0 / threshold).floor() as usize).clamp(1, MAX_GEO_CELLS);
        let cell_of = |x: f64| ((x * cells as f64) as usize).min(cells - 1);
        let mut buckets = vec![Vec::new(); cells * cells];
        for (i, &(x, y)) in points.iter().enumerate() {
            buckets[cell_of(x) * cells + cell_of(y)].push(i);
        }
        let t2 = threshold * threshold;
        for (i, &(x, y)) in points.iter().enumerate() {
            let (cx, cy) = (cell_of(x), cell_of(y));
            for bx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
                for by in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
                    for &j in &buckets[bx * cells + by] {
                        if j != i {
                            let (dx, dy) = (points[j].0 - x, points[j].1 - y);
                            if dx * dx + dy * dy < t2 {
                                adjacency[i].push(j);
                            }
                        }
                    }
                }
            }
        }
    }
    TransitionMatrix::uniform(adjacency)
}

/// Preferential attachment: a complete digraph on `m + 1` seed nodes, then
/// each new node links to `m` distinct earlier nodes drawn with probability
/// proportional to their current total (in + out) degree.
pub fn ba_graph(n: usize, m: usize, seed: u64) -> Result<TransitionMatrix> {
    if m == 0 || n <= m {
        return Err(Error::InvalidConfig(format!(
            "ba graph needs n > m >= 1, got n={n} m={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacency: Vec<Vec<usize>> = Vec::with_capacity(n);
    // Every edge endpoint, so a uniform draw is a degree-proportional draw.
    let mut endpoints = Vec::new();
    for u in 0..=m {
        let out: Vec<usize> = (0..=m).filter(|&v| v != u).collect();
        for &v in &out {
            endpoints.push(u);
            endpoints.push(v);
        }
        adjacency.push(out);
    }
    for u in m + 1..n {
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let v = endpoints[rng.random_range(0..endpoints.len())];
            if !out.contains(&v) {
                out.push(v);
            }
        }
        for &v in &out {
            endpoints.push(u);
            endpoints.push(v);
        }
        adjacency.push(out);
    }
    TransitionMatrix::uniform(adjacency)
}

/// Places `total_items` over the nodes of `matrix`.
///
/// Uniform, Direct (proportional to out-degree) and Inverse (proportional to
/// 1 / out-degree) are deterministic real masses. Ego draws a hub uniformly,
/// then drops `round(ego_fraction · T)` items one by one on uniformly chosen
/// members of the hub's closed out-neighbourhood and the rest on the other
/// nodes; `T` must be a whole number for Ego.
pub fn distribute(
    matrix: &TransitionMatrix,
    scheme: DistributionScheme,
    total_items: f64,
    ego_fraction: f64,
    seed: u64,
) -> Result<ItemDistribution> {
    if !(total_items > 0.0 && total_items.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "total_items must be positive, got {total_items}"
        )));
    }
    let n = matrix.n();
    let proportional = |weights: Vec<f64>| {
        let sum: f64 = weights.iter().sum();
        ItemDistribution::new(weights.into_iter().map(|w| total_items * w / sum).collect())
    };
    match scheme {
        DistributionScheme::Uniform => proportional(vec![1.0; n]),
        DistributionScheme::Direct => {
            proportional((0..n).map(|u| matrix.out_degree(u) as f64).collect())
        }
        DistributionScheme::Inverse => {
            proportional((0..n).map(|u| 1.0 / matrix.out_degree(u) as f64).collect())
        }
        DistributionScheme::Ego => {
            if total_items.fract() != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "ego placement needs a whole number of items, got {total_items}"
                )));
            }
            if !(ego_fraction > 0.0 && ego_fraction < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "ego_fraction must lie in (0, 1), got {ego_fraction}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let hub = rng.random_range(0..n);
            let mut inside = vec![false; n];
            inside[hub] = true;
            for (v, _) in matrix.children(hub) {
                inside[v] = true;
            }
            let (near, far): (Vec<usize>, Vec<usize>) = (0..n).partition(|&u| inside[u]);
            let total = total_items as u64;
            let near_items = if far.is_empty() {
                total
            } else {
                (ego_fraction * total_items).round() as u64
            };
            let mut x = vec![0.0; n];
            for _ in 0..near_items {
                x[near[rng.random_range(0..near.len())]] += 1.0;
            }
            for _ in near_items..total {
                x[far[rng.random_range(0..far.len())]] += 1.0;
            }
            ItemDistribution::new(x)
        }
    }
}

/// The hub [`distribute`] picks for Ego placement with this seed.
pub fn ego_hub(matrix: &TransitionMatrix, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng.random_range(0..matrix.n())
}
