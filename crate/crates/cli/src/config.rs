//! Command options. Each subcommand reads an optional section of the TOML
//! config file; any flag given on the command line replaces the file value.

use std::path::{Path, PathBuf};

use anyhow::Context;
use chainmon::experiment::{Algorithm, Variant};
use chainmon::generators::DistributionScheme;
use chainmon::simulate::OpType;
use chainmon::Edge;
use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::UsageError;

/// Resolves relative paths in `$a` against `$dir`.
macro_rules! rebase {
    ($a:expr, $dir:expr; $($f:ident),+ $(,)?) => {
        $( if let Some(p) = $a.$f.as_mut() { if p.is_relative() { *p = $dir.join(&*p); } } )+
    };
}

/// Fills every `None` field of `$a` from `$b`.
macro_rules! fill {
    ($a:expr, $b:expr; $($f:ident),+ $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )+
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Grid,
    Geo,
    Ba,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Mc,
    Exhaustive,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<GraphKind>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Links per new node for `ba`.
    #[arg(long)]
    pub m: Option<usize>,
    /// Connection radius for `geo`.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub distribution: Option<DistributionScheme>,
    /// Defaults to 10 items per node.
    #[arg(long)]
    pub total_items: Option<f64>,
    #[arg(long)]
    pub ego_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    #[arg(long)]
    pub items_out: Option<PathBuf>,
}

impl GenerateArgs {
    pub fn fill_from(&mut self, file: GenerateArgs) {
        fill!(self, file; kind, rows, cols, n, m, threshold, distribution, total_items,
              ego_fraction, seed, matrix_out, items_out);
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectArgs {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub items: Option<PathBuf>,
    /// Defaults to the algorithm's own variant.
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for the random baselines.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SelectArgs {
    pub fn fill_from(&mut self, file: SelectArgs) {
        fill!(self, file; matrix, items, variant, algorithm, k, seed, out);
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateArgs {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub items: Option<PathBuf>,
    /// One comparison row per operation, e.g. `PT,NI`.
    #[arg(long, value_delimiter = ',')]
    pub op: Option<Vec<OpType>>,
    #[arg(long, value_delimiter = ',')]
    pub nodes: Option<Vec<usize>>,
    /// Edges as `u->v`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub edges: Option<Vec<Edge>>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ValidateArgs {
    pub fn fill_from(&mut self, file: ValidateArgs) {
        fill!(self, file; matrix, items, op, nodes, edges, mode, trials, seed, out);
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Budgets, comma separated. Default 0,5,...,50.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<Algorithm>>,
    #[arg(skip)]
    pub k_range: Option<KRange>,
    #[arg(skip)]
    #[serde(default)]
    pub graphs: Vec<GraphEntry>,
}

impl ExperimentArgs {
    pub fn fill_from(&mut self, file: ExperimentArgs) {
        fill!(self, file; out, seed, k, algorithms, k_range);
        if self.graphs.is_empty() {
            self.graphs = file.graphs;
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

/// One graph of an experiment: generated, an edge list, or native files.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphEntry {
    pub name: String,
    /// `grid`, `geo`, `ba`, `edge-list` or `native`.
    pub kind: String,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub threshold: Option<f64>,
    pub path: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub items: Option<PathBuf>,
    pub distributions: Option<Vec<DistributionScheme>>,
    pub total_items: Option<f64>,
    pub ego_fraction: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeListArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    /// `index,label` map back to the source ids.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
    /// Also place items and write them here.
    #[arg(long)]
    pub items_out: Option<PathBuf>,
    #[arg(long)]
    pub distribution: Option<DistributionScheme>,
    #[arg(long)]
    pub total_items: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number nodes in file order instead of the canonical sorted order.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub file_order: Option<bool>,
}

impl EdgeListArgs {
    pub fn fill_from(&mut self, file: EdgeListArgs) {
        fill!(self, file; input, matrix_out, labels_out, items_out, distribution, total_items,
              seed, file_order);
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripsArgs {
    /// CSV with `[bike_id,]start_station,end_station,start_time,end_time`.
    #[arg(long)]
    pub trips: Option<PathBuf>,
    /// CSV with `station,count` inventories at the window start.
    #[arg(long)]
    pub stations: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_start: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<i64>,
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    #[arg(long)]
    pub items_out: Option<PathBuf>,
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

impl TripsArgs {
    pub fn fill_from(&mut self, file: TripsArgs) {
        fill!(self, file; trips, stations, t_start, t_end, matrix_out, items_out, labels_out);
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub edge_list: Option<EdgeListArgs>,
    pub trips: Option<TripsArgs>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub generate: Option<GenerateArgs>,
    pub select: Option<SelectArgs>,
    pub experiment: Option<ExperimentArgs>,
    pub validate: Option<ValidateArgs>,
    pub ingest: Option<IngestSection>,
}

impl ConfigFile {
    /// Parses the file; relative paths inside it are taken relative to the
    /// file's own directory.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ConfigFile =
            toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        if let Some(a) = cfg.generate.as_mut() {
            rebase!(a, dir; matrix_out, items_out);
        }
        if let Some(a) = cfg.select.as_mut() {
            rebase!(a, dir; matrix, items, out);
        }
        if let Some(a) = cfg.validate.as_mut() {
            rebase!(a, dir; matrix, items, out);
        }
        if let Some(a) = cfg.experiment.as_mut() {
            rebase!(a, dir; out);
            for g in &mut a.graphs {
                rebase!(g, dir; path, matrix, items);
            }
        }
        if let Some(i) = cfg.ingest.as_mut() {
            if let Some(a) = i.edge_list.as_mut() {
                rebase!(a, dir; input, matrix_out, labels_out, items_out);
            }
            if let Some(a) = i.trips.as_mut() {
                rebase!(a, dir; trips, stations, matrix_out, items_out, labels_out);
            }
        }
        Ok(cfg)
    }
}

/// Unwraps a required option or reports which one is missing.
pub fn required<T>(value: Option<T>, name: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| UsageError(format!("missing required option `{name}`")).into())
}
