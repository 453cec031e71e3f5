//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero when a criterion fails that is not listed in
//! `KNOWN_FAILURES`.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chainmon::experiment::{run_selection, Algorithm, Variant};
use chainmon::generators::{
    ba_graph, distribute, geo_graph, grid_graph, DistributionScheme, DEFAULT_EGO_FRACTION,
    DEFAULT_GEO_THRESHOLD,
};
use chainmon::selection::{
    brute_force_edges, edge_dp, node_greedy, node_greedy_naive, DpTable, DEFAULT_BRUTE_FORCE_CAP,
};
use chainmon::simulate::{
    closed_form, exhaustive_expected_uncertainty, mc_expected_uncertainty, Monitor, OpType,
};
use chainmon::{
    baseline_uncertainty, uncertainty_children, uncertainty_edge, uncertainty_node, Edge,
    ItemDistribution, TransitionMatrix,
};
use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail, with the reason printed next to the result.
const KNOWN_FAILURES: &[(usize, &str)] = &[(
    3,
    "observing only a node's total cannot separate the contributions of \
     several parents holding items, so NI exceeds PT by the variance of the \
     conditional means; equality holds only when each monitored node has at \
     most one such parent",
)];

type Criterion<'a> = (usize, &'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn stochastic_rows(r: &mut ChaCha8Rng, degrees: &[usize], n: usize) -> TransitionMatrix {
    let rows = degrees
        .iter()
        .map(|&d| {
            let targets = sample(r, n, d).into_vec();
            let w: Vec<f64> = (0..d).map(|_| r.random_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            targets
                .into_iter()
                .zip(w)
                .map(|(v, w)| (v, w / total))
                .collect()
        })
        .collect();
    TransitionMatrix::from_rows(rows).unwrap()
}

fn random_chain(r: &mut ChaCha8Rng, n: usize, max_degree: usize) -> TransitionMatrix {
    let degrees: Vec<usize> = (0..n)
        .map(|_| r.random_range(1..=max_degree.min(n)))
        .collect();
    stochastic_rows(r, &degrees, n)
}

fn counts_to_items(c: &[u64]) -> ItemDistribution {
    ItemDistribution::new(c.iter().map(|&v| v as f64).collect()).unwrap()
}

fn subsets<T: Clone>(pool: &[T], max: usize) -> Vec<Vec<T>> {
    (0..=max.min(pool.len()))
        .flat_map(|k| pool.iter().cloned().combinations(k))
        .collect()
}

fn all_edges(p: &TransitionMatrix) -> Vec<Edge> {
    p.edges().map(|(e, _)| e).collect()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn star() -> (TransitionMatrix, Vec<u64>) {
    let p = TransitionMatrix::from_rows(vec![
        vec![(1, 0.5), (2, 0.3), (3, 0.2)],
        vec![(1, 1.0)],
        vec![(2, 1.0)],
        vec![(3, 1.0)],
    ])
    .unwrap();
    (p, vec![1, 0, 0, 0])
}

fn edp_matches_brute_force() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(2..=8);
        let degrees = loop {
            let d: Vec<usize> = (0..n).map(|_| r.random_range(1..=n.min(4))).collect();
            if d.iter().sum::<usize>() <= 14 {
                break d;
            }
        };
        let p = stochastic_rows(&mut r, &degrees, n);
        let c: Vec<u64> = (0..n).map(|_| r.random_range(0..=20)).collect();
        let x = counts_to_items(&c);
        let k = r.random_range(1..=3).min(p.edge_count());
        let dp = edge_dp(&p, &x, k).unwrap().objective();
        let bf = brute_force_edges(&p, &x, k, DEFAULT_BRUTE_FORCE_CAP)
            .unwrap()
            .objective();
        worst = worst.max((dp - bf).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(30),
        format!("max |dp - brute| = {worst:.2e} over 200 instances in {elapsed:.2?}"),
    )
}

/// The tiny instances shared by the closed-form and NI checks.
fn desk_instances() -> Vec<(TransitionMatrix, Vec<u64>)> {
    let mut r = rng(2);
    (0..50)
        .map(|_| {
            let n = r.random_range(1..=4);
            let p = random_chain(&mut r, n, 3);
            let total = r.random_range(1..=6);
            let mut c = vec![0u64; n];
            for _ in 0..total {
                c[r.random_range(0..n)] += 1;
            }
            (p, c)
        })
        .collect()
}

fn exhaustive_matches_closed_forms(instances: &[(TransitionMatrix, Vec<u64>)]) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for (p, c) in instances {
        let x = counts_to_items(c);
        let nodes: Vec<usize> = (0..p.n()).collect();
        for s in subsets(&nodes, 2) {
            let m = Monitor::Nodes(s.clone());
            let pt = exhaustive_expected_uncertainty(p, c, &m, OpType::ParentTransitions).unwrap();
            let ct =
                exhaustive_expected_uncertainty(p, c, &m, OpType::ChildrenTransitions).unwrap();
            worst = worst.max((pt - uncertainty_node(p, &x, &s).unwrap()).abs());
            worst = worst.max((ct - uncertainty_children(p, &x, &s).unwrap()).abs());
            checks += 2;
        }
        for d in subsets(&all_edges(p), 2) {
            let et = exhaustive_expected_uncertainty(
                p,
                c,
                &Monitor::Edges(d.clone()),
                OpType::EdgeTransitions,
            )
            .unwrap();
            worst = worst.max((et - uncertainty_edge(p, &x, &d).unwrap()).abs());
            checks += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(60),
        format!("max gap {worst:.2e} over {checks} comparisons in {elapsed:.2?}"),
    )
}

fn node_items_match_parent_transitions(instances: &[(TransitionMatrix, Vec<u64>)]) -> Outcome {
    let mut worst = 0.0f64;
    let mut checks = 0;
    let mut violations = 0;
    let mut below = 0;
    for (p, c) in instances {
        let nodes: Vec<usize> = (0..p.n()).collect();
        for s in subsets(&nodes, 2) {
            let m = Monitor::Nodes(s);
            let pt = exhaustive_expected_uncertainty(p, c, &m, OpType::ParentTransitions).unwrap();
            let ni = exhaustive_expected_uncertainty(p, c, &m, OpType::NodeItems).unwrap();
            let gap = (ni - pt).abs();
            worst = worst.max(gap);
            checks += 1;
            if gap > 1e-12 {
                violations += 1;
            }
            if ni < pt - 1e-12 {
                below += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations}/{checks} subsets differ by more than 1e-12, max |NI - PT| = {worst:.4}; \
             NI < PT in {below} cases"
        ),
    )
}

fn nested_monotonicity() -> Outcome {
    let mut r = rng(4);
    let mut violations = 0;
    for _ in 0..500 {
        let n = r.random_range(2..=15);
        let p = random_chain(&mut r, n, 5);
        let mut mass: Vec<f64> = (0..n)
            .map(|_| {
                if r.random_bool(0.7) {
                    r.random_range(0.0..20.0)
                } else {
                    0.0
                }
            })
            .collect();
        mass[0] += 1.0;
        let x = ItemDistribution::new(mass).unwrap();
        let f0 = baseline_uncertainty(&p, &x).unwrap();
        let small: Vec<usize> = (0..n).filter(|_| r.random_bool(0.3)).collect();
        let large: Vec<usize> = (0..n)
            .filter(|v| small.contains(v) || r.random_bool(0.3))
            .collect();
        let edges = all_edges(&p);
        let small_e: Vec<Edge> = edges
            .iter()
            .copied()
            .filter(|_| r.random_bool(0.3))
            .collect();
        let large_e: Vec<Edge> = edges
            .iter()
            .copied()
            .filter(|e| small_e.contains(e) || r.random_bool(0.3))
            .collect();
        let pairs = [
            (
                uncertainty_node(&p, &x, &small).unwrap(),
                uncertainty_node(&p, &x, &large).unwrap(),
            ),
            (
                uncertainty_edge(&p, &x, &small_e).unwrap(),
                uncertainty_edge(&p, &x, &large_e).unwrap(),
            ),
            (
                uncertainty_children(&p, &x, &small).unwrap(),
                uncertainty_children(&p, &x, &large).unwrap(),
            ),
        ];
        for (fs, fl) in pairs {
            if !(fl <= fs + 1e-12 && fs <= f0 + 1e-12) {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over 500 pairs and three functionals"),
    )
}

fn incremental_matches_naive() -> Outcome {
    let mut r = rng(5);
    let mut mismatches = 0;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(1..=30);
        let p = random_chain(&mut r, n, 6);
        let x =
            ItemDistribution::new((0..n).map(|_| r.random_range(0..=20) as f64).collect()).unwrap();
        let k = r.random_range(0..=10).min(n);
        let inc = node_greedy(&p, &x, k).unwrap();
        let naive = node_greedy_naive(&p, &x, k).unwrap();
        if inc.nodes != naive.nodes {
            mismatches += 1;
        }
        for (a, b) in inc.objective_trace.iter().zip(&naive.objective_trace) {
            worst = worst.max((a - b).abs());
        }
    }
    let p = ba_graph(1000, 3, 5).unwrap();
    let x = distribute(
        &p,
        DistributionScheme::Uniform,
        10_000.0,
        DEFAULT_EGO_FRACTION,
        5,
    )
    .unwrap();
    let t = Instant::now();
    let inc = node_greedy(&p, &x, 10).unwrap();
    let t_inc = t.elapsed();
    let t = Instant::now();
    let naive = node_greedy_naive(&p, &x, 10).unwrap();
    let t_naive = t.elapsed();
    let same_large = inc.nodes == naive.nodes;
    outcome(
        mismatches == 0 && worst < 1e-9 && same_large,
        format!(
            "{mismatches} selection mismatches, max trace gap {worst:.2e}; n=1000 k=10: \
             incremental {t_inc:.2?}, naive {t_naive:.2?} (ratio {:.1}x)",
            t_naive.as_secs_f64() / t_inc.as_secs_f64().max(1e-9)
        ),
    )
}

fn probability_prefix_is_optimal() -> Outcome {
    let mut r = rng(6);
    let mut violations = 0;
    let mut checked = 0;
    for _ in 0..100 {
        let d = r.random_range(1..=10);
        let n = d + 1;
        let w: Vec<f64> = (0..d).map(|_| r.random_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        let mut rows = vec![(1..=d).zip(w.iter().map(|w| w / total)).collect::<Vec<_>>()];
        rows.extend((1..n).map(|v| vec![(v, 1.0)]));
        let p = TransitionMatrix::from_rows(rows).unwrap();
        let mut x = vec![0.0; n];
        x[0] = r.random_range(1..=20) as f64;
        let x = ItemDistribution::new(x).unwrap();
        let f0 = baseline_uncertainty(&p, &x).unwrap();
        let mut by_prob: Vec<(Edge, f64)> =
            p.children(0).map(|(v, q)| (Edge::new(0, v), q)).collect();
        by_prob.sort_by(|a, b| b.1.total_cmp(&a.1));
        let table = DpTable::build(&p, &x, d).unwrap();
        let edges = all_edges(&p);
        for m in 0..=d {
            let prefix: Vec<Edge> = by_prob[..m].iter().map(|e| e.0).collect();
            let prefix_value = uncertainty_edge(&p, &x, &prefix).unwrap();
            let best = edges
                .iter()
                .copied()
                .combinations(m)
                .map(|s| uncertainty_edge(&p, &x, &s).unwrap())
                .fold(f64::INFINITY, f64::min);
            checked += 1;
            let tol = 1e-12 * f0.max(1.0);
            if prefix_value > best + tol || (table.isol(0)[m] - best).abs() > tol {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over {checked} (instance, m) pairs"),
    )
}

fn ratio(
    algorithm: Algorithm,
    p: &TransitionMatrix,
    x: &ItemDistribution,
    k: usize,
    variant: Variant,
) -> f64 {
    run_selection(algorithm, variant, p, x, k, 0)
        .unwrap()
        .report()
        .ratio
}

const EDGE_BASELINES: [Algorithm; 4] = [
    Algorithm::EdgeBetweenness,
    Algorithm::EdgeNumItems,
    Algorithm::EdgeProbability,
    Algorithm::RandomEdges,
];

const NODE_BASELINES: [Algorithm; 6] = [
    Algorithm::InDegree,
    Algorithm::InProbability,
    Algorithm::NodeBetweenness,
    Algorithm::Closeness,
    Algorithm::NodeNumItems,
    Algorithm::RandomNodes,
];

fn best_baseline(
    algs: &[Algorithm],
    p: &TransitionMatrix,
    x: &ItemDistribution,
    k: usize,
) -> (f64, &'static str) {
    algs.iter()
        .map(|&a| (ratio(a, p, x, k, a.default_variant()), a.name()))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

fn table_one_cells() -> Outcome {
    let start = Instant::now();
    let k = 50;
    let grid = grid_graph(100, 10).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for scheme in [
        DistributionScheme::Uniform,
        DistributionScheme::Direct,
        DistributionScheme::Inverse,
    ] {
        let x = distribute(&grid, scheme, 10_000.0, DEFAULT_EGO_FRACTION, 1).unwrap();
        let rn = ratio(Algorithm::NodeGreedy, &grid, &x, k, Variant::Node);
        let re = ratio(Algorithm::EdgeGreedy, &grid, &x, k, Variant::Edge);
        pass &= (rn - 0.92).abs() <= 0.02 && (re - 0.98).abs() <= 0.02;
        lines.push(format!("grid/{scheme}: node {rn:.4}, edge {re:.4}"));
    }

    let geo = geo_graph(1000, DEFAULT_GEO_THRESHOLD, 1).unwrap();
    let ba = ba_graph(1000, 3, 1).unwrap();
    let as_graph = chainmon::ingest::load_edge_list(fixture("as_synthetic.txt")).unwrap();
    let cells: [(&str, &TransitionMatrix, DistributionScheme); 7] = [
        ("geo", &geo, DistributionScheme::Uniform),
        ("geo", &geo, DistributionScheme::Ego),
        ("ba", &ba, DistributionScheme::Uniform),
        ("ba", &ba, DistributionScheme::Ego),
        ("grid", &grid, DistributionScheme::Ego),
        ("as", &as_graph, DistributionScheme::Uniform),
        ("as", &as_graph, DistributionScheme::Ego),
    ];
    for (name, p, scheme) in cells {
        let total = 10.0 * p.n() as f64;
        let x = distribute(p, scheme, total, DEFAULT_EGO_FRACTION, 1).unwrap();
        let re = ratio(Algorithm::EdgeGreedy, p, &x, k, Variant::Edge);
        let (be, be_name) = best_baseline(&EDGE_BASELINES, p, &x, k);
        let rn = ratio(Algorithm::NodeGreedy, p, &x, k, Variant::Node);
        let (bn, bn_name) = best_baseline(&NODE_BASELINES, p, &x, k);
        pass &= re <= be + 1e-9;
        lines.push(format!(
            "{name}/{scheme}: edge {re:.4} vs {be_name} {be:.4}; node {rn:.4} vs {bn_name} {bn:.4}{}",
            if rn <= bn + 1e-9 { "" } else { " (node greedy behind)" }
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    outcome(pass, format!("{} [{elapsed:.2?}]", lines.join("; ")))
}

fn monte_carlo_agrees() -> Outcome {
    let start = Instant::now();
    let (star_p, star_c) = star();
    let geo = {
        let g = geo_graph(10, 0.45, 8).unwrap();
        let mut r = rng(8);
        let c: Vec<u64> = (0..10).map(|_| r.random_range(0..=8)).collect();
        (g, c)
    };
    let geo_edges = all_edges(&geo.0);
    let cases: Vec<(&str, &TransitionMatrix, &[u64], Monitor, OpType)> = vec![
        (
            "star",
            &star_p,
            &star_c,
            Monitor::Nodes(vec![1]),
            OpType::ParentTransitions,
        ),
        (
            "star",
            &star_p,
            &star_c,
            Monitor::Edges(vec![Edge::new(0, 3)]),
            OpType::EdgeTransitions,
        ),
        (
            "star",
            &star_p,
            &star_c,
            Monitor::Nodes(vec![1]),
            OpType::ChildrenTransitions,
        ),
        (
            "geo10",
            &geo.0,
            &geo.1,
            Monitor::Nodes(vec![0, 3]),
            OpType::ParentTransitions,
        ),
        (
            "geo10",
            &geo.0,
            &geo.1,
            Monitor::Edges(geo_edges.iter().copied().step_by(3).collect()),
            OpType::EdgeTransitions,
        ),
        (
            "geo10",
            &geo.0,
            &geo.1,
            Monitor::Nodes(vec![0, 3]),
            OpType::ChildrenTransitions,
        ),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (i, (name, p, c, monitor, op)) in cases.into_iter().enumerate() {
        let exact = closed_form(p, &counts_to_items(c), &monitor, op).unwrap();
        let est = mc_expected_uncertainty(p, c, &monitor, op, 100_000, 100 + i as u64).unwrap();
        // CT leaves no randomness in the realised uncertainty, so the
        // standard error is zero and only rounding separates the two.
        let slack = 1e-9 * exact.abs().max(1.0);
        let gap = (est.mean - exact).abs();
        pass &= gap <= 4.0 * est.stderr + slack;
        lines.push(format!(
            "{name}/{op}: gap {gap:.2e}, 4se {:.2e}",
            4.0 * est.stderr
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    outcome(pass, format!("{} [{elapsed:.2?}]", lines.join("; ")))
}

/// Runs the binary and returns stdout followed by every listed output file.
fn run_cli(workers: usize, args: &[String], outputs: &[PathBuf]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_chainmon"))
        .env("CHAINMON_WORKERS", workers.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`{}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let mut bytes = out.stdout;
    for path in outputs {
        bytes.extend(std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?);
    }
    Ok(bytes)
}

fn cli_is_deterministic() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let tmp = |n: &str| dir.path().join(n);
    let s = |p: &Path| p.display().to_string();
    let fx = |n: &str| s(&fixture(n));
    let words = |v: &[&str]| v.iter().map(|w| w.to_string()).collect::<Vec<_>>();

    let mut commands: Vec<(String, Vec<String>, Vec<PathBuf>)> = Vec::new();
    for (kind, extra) in [
        (
            "grid",
            vec!["--rows", "20", "--cols", "10", "--distribution", "inverse"],
        ),
        (
            "geo",
            vec!["--n", "300", "--threshold", "0.08", "--distribution", "ego"],
        ),
        (
            "ba",
            vec!["--n", "300", "--m", "3", "--distribution", "ego"],
        ),
    ] {
        let (m, x) = (tmp(&format!("{kind}.m")), tmp(&format!("{kind}.x")));
        let mut args = words(&["generate", "--kind", kind, "--seed", "3"]);
        args.extend(words(&extra));
        args.extend(
            [s(&m), s(&x)]
                .into_iter()
                .zip(["--matrix-out", "--items-out"])
                .flat_map(|(v, f)| [f.to_string(), v]),
        );
        commands.push((format!("generate {kind}"), args, vec![m, x]));
    }
    for alg in Algorithm::ALL {
        let out = tmp(&format!("sel-{}", alg.name()));
        let args = words(&[
            "select",
            "--algorithm",
            alg.name(),
            "--k",
            "12",
            "--seed",
            "4",
        ])
        .into_iter()
        .chain([
            "--matrix".into(),
            s(&tmp("ba.m")),
            "--items".into(),
            s(&tmp("ba.x")),
            "--out".into(),
            s(&out),
        ])
        .collect();
        commands.push((format!("select {}", alg.name()), args, vec![out]));
    }
    for (config, name) in [("sweep.toml", "sweep"), ("grid_k50.toml", "grid")] {
        let out = tmp(&format!("{name}.csv"));
        commands.push((
            format!("experiment {name}"),
            vec![
                "--config".into(),
                fx(config),
                "experiment".into(),
                "--out".into(),
                s(&out),
            ],
            vec![out],
        ));
    }
    commands.push((
        "validate exhaustive".into(),
        words(&["validate", "--op", "PT,NI,CT", "--nodes", "1,2"])
            .into_iter()
            .chain([
                "--matrix".into(),
                fx("star_matrix.txt"),
                "--items".into(),
                fx("star_items.txt"),
            ])
            .collect(),
        vec![],
    ));
    commands.push((
        "validate mc".into(),
        words(&[
            "validate",
            "--op",
            "ET",
            "--edges",
            "0->1,0->3",
            "--mode",
            "mc",
            "--trials",
            "50000",
            "--seed",
            "9",
        ])
        .into_iter()
        .chain([
            "--matrix".into(),
            fx("star_matrix.txt"),
            "--items".into(),
            fx("star_items.txt"),
        ])
        .collect(),
        vec![],
    ));
    let (am, al, ax) = (tmp("as.m"), tmp("as.l"), tmp("as.x"));
    commands.push((
        "ingest edge-list".into(),
        vec![
            "ingest".into(),
            "edge-list".into(),
            "--input".into(),
            fx("as_synthetic.txt"),
            "--matrix-out".into(),
            s(&am),
            "--labels-out".into(),
            s(&al),
            "--items-out".into(),
            s(&ax),
            "--distribution".into(),
            "ego".into(),
            "--seed".into(),
            "2".into(),
        ],
        vec![am, al, ax],
    ));
    let (tm, tx, tl) = (tmp("t.m"), tmp("t.x"), tmp("t.l"));
    commands.push((
        "ingest trips".into(),
        vec![
            "ingest".into(),
            "trips".into(),
            "--trips".into(),
            fx("trips_anonymous.csv"),
            "--stations".into(),
            fx("stations.csv"),
            "--t-start".into(),
            "1333274400".into(),
            "--t-end".into(),
            "1333281600".into(),
            "--matrix-out".into(),
            s(&tm),
            "--items-out".into(),
            s(&tx),
            "--labels-out".into(),
            s(&tl),
        ],
        vec![tm, tx, tl],
    ));

    let mut differing = Vec::new();
    let mut errors = Vec::new();
    for (name, args, outputs) in &commands {
        let runs: Vec<_> = [1, 8].iter().map(|&w| run_cli(w, args, outputs)).collect();
        match (&runs[0], &runs[1]) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => differing.push(name.clone()),
            (Err(e), _) | (_, Err(e)) => errors.push(e.clone()),
        }
    }
    let pass = differing.is_empty() && errors.is_empty();
    let mut detail = format!("{} commands compared with 1 and 8 workers", commands.len());
    if !differing.is_empty() {
        detail += &format!("; outputs differ for: {}", differing.join(", "));
    }
    if !errors.is_empty() {
        detail += &format!("; errors: {}", errors.join(" | "));
    }
    outcome(pass, detail)
}

fn main() -> ExitCode {
    let desk = desk_instances();
    let criteria: Vec<Criterion> = vec![
        (
            1,
            "edge DP equals brute force",
            Box::new(edp_matches_brute_force),
        ),
        (
            2,
            "enumeration matches closed forms",
            Box::new(|| exhaustive_matches_closed_forms(&desk)),
        ),
        (
            3,
            "NI equals PT under enumeration",
            Box::new(|| node_items_match_parent_transitions(&desk)),
        ),
        (
            4,
            "nested selections never raise uncertainty",
            Box::new(nested_monotonicity),
        ),
        (
            5,
            "incremental greedy matches naive",
            Box::new(incremental_matches_naive),
        ),
        (
            6,
            "most probable prefix is optimal per node",
            Box::new(probability_prefix_is_optimal),
        ),
        (
            7,
            "grid ratios and greedy versus baselines",
            Box::new(table_one_cells),
        ),
        (
            8,
            "Monte Carlo within 4 standard errors",
            Box::new(monte_carlo_agrees),
        ),
        (
            9,
            "CLI output independent of worker count",
            Box::new(cli_is_deterministic),
        ),
    ];
    let mut unexpected = 0;
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let result = check();
        println!(
            "[{}] {id}. {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        if !result.pass {
            failed += 1;
            match KNOWN_FAILURES.iter().find(|(k, _)| k == id) {
                Some((_, why)) => println!("       known failure: {why}"),
                None => unexpected += 1,
            }
        }
    }
    println!(
        "{} of {} criteria passed; {unexpected} unexpected failure(s)",
        criteria.len() - failed,
        criteria.len()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
