use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use chainmon::experiment::{self, Algorithm, Instance};
use chainmon::generators::{
    distribute, DistributionScheme, GenConfig, GraphSpec, DEFAULT_EGO_FRACTION,
    DEFAULT_GEO_THRESHOLD, DEFAULT_ITEMS_PER_NODE,
};
use chainmon::ingest::{self, NodeOrder};
use chainmon::simulate::{self, Monitor, OpType};
use chainmon::{baseline_uncertainty, ItemDistribution, TransitionMatrix, UncertaintyReport};

use crate::config::{
    required, EdgeListArgs, ExperimentArgs, GenerateArgs, GraphEntry, GraphKind, Mode, SelectArgs,
    TripsArgs, ValidateArgs,
};
use crate::{InternalError, UsageError};

const TRACE_TOLERANCE: f64 = 1e-9;
const DEFAULT_TRIALS: usize = 10_000;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(
    matrix: Option<&Path>,
    items: Option<&Path>,
) -> Result<(TransitionMatrix, ItemDistribution)> {
    let matrix = ingest::read_matrix(required(matrix, "matrix")?)?;
    let items = ingest::read_items(required(items, "items")?)?;
    if items.len() != matrix.n() {
        return Err(chainmon::Error::DimensionMismatch {
            nodes: matrix.n(),
            items: items.len(),
        }
        .into());
    }
    Ok((matrix, items))
}

fn graph_spec(
    kind: GraphKind,
    rows: Option<usize>,
    cols: Option<usize>,
    n: Option<usize>,
    m: Option<usize>,
    threshold: Option<f64>,
) -> Result<GraphSpec> {
    let spec = match kind {
        GraphKind::Grid => GraphSpec::Grid {
            rows: required(rows, "rows")?,
            cols: required(cols, "cols")?,
        },
        GraphKind::Geo => GraphSpec::Geo {
            n: required(n, "n")?,
            threshold: threshold.unwrap_or(DEFAULT_GEO_THRESHOLD),
        },
        GraphKind::Ba => GraphSpec::Ba {
            n: required(n, "n")?,
            m: required(m, "m")?,
        },
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let spec = graph_spec(
        required(args.kind, "kind")?,
        args.rows,
        args.cols,
        args.n,
        args.m,
        args.threshold,
    )?;
    let matrix_out = required(args.matrix_out, "matrix-out")?;
    let items_out = required(args.items_out, "items-out")?;
    let seed = args.seed.unwrap_or(0);
    let mut cfg = GenConfig::new(
        spec,
        args.distribution.unwrap_or(DistributionScheme::Uniform),
        seed,
    );
    if let Some(t) = args.total_items {
        cfg.total_items = t;
    }
    if let Some(f) = args.ego_fraction {
        cfg.ego_fraction = f;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let (matrix, items) = cfg.generate()?;
    ingest::write_matrix(&matrix_out, &matrix)?;
    ingest::write_items(&items_out, &items)?;
    println!("seed={seed}");
    println!("nodes={}", matrix.n());
    println!("edges={}", matrix.edge_count());
    Ok(())
}

/// Non-increasing and bounded by `F₀`, as every selector guarantees.
fn check_trace(baseline: f64, trace: &[f64], what: &str) -> Result<()> {
    let tol = TRACE_TOLERANCE * baseline.max(1.0);
    let mut prev = baseline;
    for (i, &f) in trace.iter().enumerate() {
        if !(f >= -tol && f <= prev + tol) {
            return Err(InternalError(format!(
                "{what}: objective {f} after step {} exceeds {prev}",
                i + 1
            ))
            .into());
        }
        prev = f;
    }
    Ok(())
}

pub fn select(args: SelectArgs) -> Result<()> {
    let (matrix, items) = load(args.matrix.as_deref(), args.items.as_deref())?;
    let algorithm = required(args.algorithm, "algorithm")?;
    let variant = args.variant.unwrap_or(algorithm.default_variant());
    let k = required(args.k, "k")?;
    let run = experiment::run_selection(
        algorithm,
        variant,
        &matrix,
        &items,
        k,
        args.seed.unwrap_or(0),
    )?;
    check_trace(run.baseline, &run.trace, algorithm.name())?;

    let mut out = output(args.out.as_deref())?;
    writeln!(out, "step,selected,objective,ratio")?;
    let f0 = run.baseline;
    writeln!(out, "0,,{f0},{}", UncertaintyReport::new(f0, f0).ratio)?;
    for (i, (label, f)) in run.labels().iter().zip(&run.trace).enumerate() {
        writeln!(
            out,
            "{},{label},{f},{}",
            i + 1,
            UncertaintyReport::new(f0, *f).ratio
        )?;
    }
    out.flush()?;
    Ok(())
}

fn k_values(args: &ExperimentArgs) -> Result<Vec<usize>> {
    if let Some(k) = &args.k {
        if k.is_empty() {
            return Err(usage("k list is empty"));
        }
        let mut k = k.clone();
        k.sort_unstable();
        k.dedup();
        return Ok(k);
    }
    Ok(match &args.k_range {
        Some(r) => {
            if r.step == 0 || r.start > r.end {
                return Err(usage("k_range needs start <= end and step >= 1"));
            }
            (r.start..=r.end).step_by(r.step).collect()
        }
        None => (0..=50).step_by(5).collect(),
    })
}

fn instances(entry: &GraphEntry, seed: u64) -> Result<Vec<Instance>> {
    let seed = entry.seed.unwrap_or(seed);
    let ctx = || format!("graph `{}`", entry.name);
    let matrix = match entry.kind.as_str() {
        "grid" | "geo" | "ba" => {
            let kind = match entry.kind.as_str() {
                "grid" => GraphKind::Grid,
                "geo" => GraphKind::Geo,
                _ => GraphKind::Ba,
            };
            graph_spec(
                kind,
                entry.rows,
                entry.cols,
                entry.n,
                entry.m,
                entry.threshold,
            )
            .with_context(ctx)?
            .build(seed)?
        }
        "edge-list" => {
            ingest::load_edge_list(required(entry.path.clone(), "path").with_context(ctx)?)?
        }
        "native" => {
            let (matrix, items) =
                load(entry.matrix.as_deref(), entry.items.as_deref()).with_context(ctx)?;
            if entry.distributions.is_some() {
                return Err(usage(format!(
                    "{}: native graphs carry their own items",
                    ctx()
                )));
            }
            return Ok(vec![Instance {
                graph: entry.name.clone(),
                distribution: "file".into(),
                matrix,
                items,
            }]);
        }
        other => return Err(usage(format!("{}: unknown kind `{other}`", ctx()))),
    };
    let total = entry
        .total_items
        .unwrap_or(DEFAULT_ITEMS_PER_NODE * matrix.n() as f64);
    let fraction = entry.ego_fraction.unwrap_or(DEFAULT_EGO_FRACTION);
    let schemes = entry
        .distributions
        .clone()
        .unwrap_or_else(|| vec![DistributionScheme::Uniform]);
    schemes
        .into_iter()
        .map(|scheme| {
            let items = distribute(&matrix, scheme, total, fraction, seed)
                .map_err(|e| usage(format!("{}: {e}", ctx())))?;
            Ok(Instance {
                graph: entry.name.clone(),
                distribution: scheme.name().to_owned(),
                matrix: matrix.clone(),
                items,
            })
        })
        .collect()
}

pub fn experiment(args: ExperimentArgs) -> Result<()> {
    if args.graphs.is_empty() {
        return Err(usage(
            "experiment needs at least one [[experiment.graphs]] entry",
        ));
    }
    let ks = k_values(&args)?;
    let seed = args.seed.unwrap_or(0);
    let algorithms = args.algorithms.clone().unwrap_or_else(|| {
        Algorithm::ALL
            .into_iter()
            .filter(|&a| a != Algorithm::NodeGreedyNaive)
            .collect()
    });
    let mut all = Vec::new();
    for entry in &args.graphs {
        all.extend(instances(entry, seed)?);
    }
    let k_max = *ks.last().expect("k list is non-empty");
    for inst in &all {
        for &alg in &algorithms {
            let available = if alg.selects_edges() {
                inst.matrix.edge_count()
            } else {
                inst.matrix.n()
            };
            if k_max > available {
                return Err(usage(format!(
                    "k = {k_max} exceeds the {available} candidates of {alg} on `{}`",
                    inst.graph
                )));
            }
        }
    }

    let rows = experiment::run_experiment(&all, &algorithms, &ks, seed)?;
    for r in &rows {
        if !(r.ratio >= -TRACE_TOLERANCE && r.ratio <= 1.0 + TRACE_TOLERANCE) {
            return Err(InternalError(format!(
                "{} on {}/{} at k = {} has ratio {}",
                r.algorithm, r.graph, r.distribution, r.k, r.ratio
            ))
            .into());
        }
    }
    let out = output(args.out.as_deref())?;
    ingest::write_report_to(out, &rows)?;
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    let (matrix, items) = load(args.matrix.as_deref(), args.items.as_deref())?;
    let counts = items.integer_counts()?;
    let ops = args
        .op
        .clone()
        .unwrap_or_else(|| vec![OpType::ParentTransitions]);
    let mode = args.mode.unwrap_or(Mode::Exhaustive);
    let trials = args.trials.unwrap_or(DEFAULT_TRIALS);
    let seed = args.seed.unwrap_or(0);

    let mut out = output(args.out.as_deref())?;
    writeln!(out, "op,mode,closed_form,oracle,abs_gap,stderr")?;
    for op in ops {
        let monitor = if op == OpType::EdgeTransitions {
            Monitor::Edges(args.edges.clone().unwrap_or_default())
        } else {
            if args.edges.is_some() && args.nodes.is_none() {
                return Err(usage(format!("{op} monitors nodes; pass --nodes")));
            }
            Monitor::Nodes(args.nodes.clone().unwrap_or_default())
        };
        let closed = simulate::closed_form(&matrix, &items, &monitor, op)?;
        let (mode_name, oracle, stderr) = match mode {
            Mode::Exhaustive => (
                "exhaustive",
                simulate::exhaustive_expected_uncertainty(&matrix, &counts, &monitor, op)?,
                String::new(),
            ),
            Mode::Mc => {
                let est = simulate::mc_expected_uncertainty(
                    &matrix, &counts, &monitor, op, trials, seed,
                )?;
                ("mc", est.mean, est.stderr.to_string())
            }
        };
        writeln!(
            out,
            "{op},{mode_name},{closed},{oracle},{},{stderr}",
            (closed - oracle).abs()
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn ingest_edge_list(args: EdgeListArgs) -> Result<()> {
    let input = required(args.input, "input")?;
    let order = if args.file_order.unwrap_or(false) {
        NodeOrder::FileOrder
    } else {
        NodeOrder::Canonical
    };
    let graph = ingest::load_edge_list_with(&input, order)?;
    ingest::write_matrix(required(args.matrix_out, "matrix-out")?, &graph.matrix)?;
    if let Some(path) = &args.labels_out {
        ingest::write_labels(path, &graph.labels)?;
    }
    if let Some(path) = &args.items_out {
        let n = graph.matrix.n() as f64;
        let items = distribute(
            &graph.matrix,
            args.distribution.unwrap_or(DistributionScheme::Uniform),
            args.total_items.unwrap_or(DEFAULT_ITEMS_PER_NODE * n),
            DEFAULT_EGO_FRACTION,
            args.seed.unwrap_or(0),
        )
        .map_err(|e| usage(e.to_string()))?;
        ingest::write_items(path, &items)?;
    } else if args.distribution.is_some() || args.total_items.is_some() {
        return Err(usage("item options need --items-out"));
    }
    println!("nodes={}", graph.matrix.n());
    println!("edges={}", graph.matrix.edge_count());
    Ok(())
}

pub fn ingest_trips(args: TripsArgs) -> Result<()> {
    let trips = ingest::read_trips(required(args.trips, "trips")?)?;
    let stations = ingest::read_station_counts(required(args.stations, "stations")?)?;
    let chain = ingest::build_trip_chain(
        &trips,
        &stations,
        required(args.t_start, "t-start")?,
        required(args.t_end, "t-end")?,
    )?;
    ingest::write_matrix(required(args.matrix_out, "matrix-out")?, &chain.matrix)?;
    ingest::write_items(required(args.items_out, "items-out")?, &chain.items)?;
    if let Some(path) = &args.labels_out {
        ingest::write_labels(path, &chain.stations)?;
    }
    println!("stations={}", chain.stations.len());
    println!("edges={}", chain.matrix.edge_count());
    println!(
        "baseline={}",
        baseline_uncertainty(&chain.matrix, &chain.items)?
    );
    Ok(())
}
