//! Readers and writers: SNAP-style edge lists, bike-share trip logs, the
//! native matrix/item text formats, and the experiment report CSV.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{ItemDistribution, TransitionMatrix};
use crate::error::{Error, Result};

/// How node ids of an edge list are assigned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NodeOrder {
    /// Ids follow first appearance after sorting the normalised pairs, so
    /// reordering the lines of a file does not change the result.
    #[default]
    Canonical,
    /// Ids follow first appearance in file order.
    FileOrder,
}

/// A graph read from an edge list, with the original label of each node.
#[derive(Clone, Debug)]
pub struct LabeledGraph {
    pub matrix: TransitionMatrix,
    pub labels: Vec<String>,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Loads an undirected edge list with canonical node ordering.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<TransitionMatrix> {
    Ok(load_edge_list_with(path, NodeOrder::Canonical)?.matrix)
}

/// Each record `u v` becomes the two directed edges `u->v` and `v->u`; rows
/// are uniform over distinct out-neighbours.
pub fn load_edge_list_with(path: impl AsRef<Path>, order: NodeOrder) -> Result<LabeledGraph> {
    let path = path.as_ref();
    parse_edge_list(open(path)?, path, order)
}

/// Label comparison: numerically when both parse as integers.
fn label_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

pub fn parse_edge_list(reader: impl Read, path: &Path, order: NodeOrder) -> Result<LabeledGraph> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => pairs.push((a.to_owned(), b.to_owned())),
            _ => {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: i + 1,
                    message: format!("expected two node ids, got `{trimmed}`"),
                })
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 0,
            message: "edge list contains no edges".into(),
        });
    }
    if order == NodeOrder::Canonical {
        for (a, b) in pairs.iter_mut() {
            if label_cmp(a, b).is_gt() {
                std::mem::swap(a, b);
            }
        }
        pairs.sort_by(|x, y| label_cmp(&x.0, &y.0).then_with(|| label_cmp(&x.1, &y.1)));
    }

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut id = |label: &String| {
        *index.entry(label.clone()).or_insert_with(|| {
            labels.push(label.clone());
            labels.len() - 1
        })
    };
    let compact: Vec<(usize, usize)> = pairs.iter().map(|(a, b)| (id(a), id(b))).collect();
    let mut adjacency = vec![Vec::new(); labels.len()];
    for (u, v) in compact {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    Ok(LabeledGraph {
        matrix: TransitionMatrix::uniform(adjacency)?,
        labels,
    })
}

/// One bike-share trip, times in epoch seconds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripRecord {
    #[serde(default)]
    pub bike_id: Option<String>,
    pub start_station: String,
    pub end_station: String,
    pub start_time: i64,
    pub end_time: i64,
}

/// The chain inferred from trips, over stations in ascending id order.
#[derive(Clone, Debug)]
pub struct TripChain {
    pub matrix: TransitionMatrix,
    pub items: ItemDistribution,
    pub stations: Vec<String>,
    /// `n_uv` counts indexed like `stations`.
    pub moves: Vec<BTreeMap<usize, u64>>,
}

/// Builds `P(u, v) = n_uv / n_u` where `n_u` is the inventory of `u` at
/// `t_start` and `n_uv` the number of those bikes docked at `v` at the end.
///
/// Only trips departing within `[t_start, t_end]` move bikes. A trip still
/// under way at `t_end` counts toward its destination. With bike ids each
/// bike goes from its first departure station to its last arrival station;
/// without them departures take the longest-docked bike at the station
/// (first in, first out). Stations with no inventory get a self-loop.
pub fn build_trip_chain(
    trips: &[TripRecord],
    station_counts: &BTreeMap<String, u64>,
    t_start: i64,
    t_end: i64,
) -> Result<TripChain> {
    if t_start > t_end {
        return Err(Error::InvalidTrips(format!(
            "interval start {t_start} is after its end {t_end}"
        )));
    }
    if station_counts.is_empty() {
        return Err(Error::InvalidTrips("no stations given".into()));
    }
    let stations: Vec<String> = station_counts.keys().cloned().collect();
    let index: HashMap<&str, usize> = stations
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let counts: Vec<u64> = station_counts.values().copied().collect();
    let station = |s: &str| {
        index
            .get(s)
            .copied()
            .ok_or_else(|| Error::InvalidTrips(format!("trip references unknown station `{s}`")))
    };

    let mut window: Vec<(usize, usize, i64, i64, Option<&str>)> = Vec::new();
    for t in trips {
        if t.start_station.is_empty() || t.end_station.is_empty() {
            return Err(Error::InvalidTrips("empty station id".into()));
        }
        if t.start_time > t.end_time {
            return Err(Error::InvalidTrips(format!(
                "trip from `{}` ends before it starts",
                t.start_station
            )));
        }
        let (u, v) = (station(&t.start_station)?, station(&t.end_station)?);
        if t.start_time >= t_start && t.start_time <= t_end {
            window.push((u, v, t.start_time, t.end_time, t.bike_id.as_deref()));
        }
    }
    let has_ids = window.iter().any(|w| w.4.is_some());
    if has_ids && window.iter().any(|w| w.4.is_none()) {
        return Err(Error::InvalidTrips(
            "bike ids must be given for every trip or for none".into(),
        ));
    }

    let n = stations.len();
    let mut departed = vec![0u64; n];
    let mut moves: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n];
    if has_ids {
        let mut bikes: BTreeMap<&str, Vec<(i64, i64, usize, usize)>> = BTreeMap::new();
        for &(u, v, s, e, id) in &window {
            bikes.entry(id.unwrap()).or_default().push((s, e, u, v));
        }
        for legs in bikes.values_mut() {
            legs.sort_unstable();
            let origin = legs[0].2;
            let dest = legs[legs.len() - 1].3;
            departed[origin] += 1;
            *moves[origin].entry(dest).or_insert(0) += 1;
        }
    } else {
        // Tokens record the station each docked bike started at.
        let mut docks: Vec<VecDeque<usize>> = counts
            .iter()
            .enumerate()
            .map(|(u, &c)| (0..c).map(|_| u).collect())
            .collect();
        window.sort_by_key(|w| (w.2, w.3));
        let mut in_transit: BinaryHeap<Reverse<(i64, usize, usize, usize)>> = BinaryHeap::new();
        for (seq, &(u, v, s, e, _)) in window.iter().enumerate() {
            while let Some(&Reverse((at, _, dest, origin))) = in_transit.peek() {
                if at > s {
                    break;
                }
                in_transit.pop();
                docks[dest].push_back(origin);
            }
            let origin = docks[u].pop_front().ok_or_else(|| {
                Error::InvalidTrips(format!(
                    "station `{}` has no bike left for a departure at {s}",
                    stations[u]
                ))
            })?;
            in_transit.push(Reverse((e, seq, v, origin)));
        }
        while let Some(Reverse((_, _, dest, origin))) = in_transit.pop() {
            docks[dest].push_back(origin);
        }
        for (v, tokens) in docks.iter().enumerate() {
            for &origin in tokens {
                *moves[origin].entry(v).or_insert(0) += 1;
            }
        }
        for (u, row) in moves.iter().enumerate() {
            departed[u] = counts[u] - row.get(&u).copied().unwrap_or(0);
        }
        // The self-loop is re-derived below from the departures.
        for (u, row) in moves.iter_mut().enumerate() {
            row.remove(&u);
        }
    }

    for u in 0..n {
        if departed[u] > counts[u] {
            return Err(Error::InvalidTrips(format!(
                "{} bikes leave station `{}`, which holds {}",
                departed[u], stations[u], counts[u]
            )));
        }
        let stay = counts[u] - departed[u];
        if stay > 0 {
            *moves[u].entry(u).or_insert(0) += stay;
        }
    }

    let rows = moves
        .iter()
        .enumerate()
        .map(|(u, row)| {
            if counts[u] == 0 {
                vec![(u, 1.0)]
            } else {
                row.iter()
                    .map(|(&v, &c)| (v, c as f64 / counts[u] as f64))
                    .collect()
            }
        })
        .collect();
    let matrix = TransitionMatrix::from_rows(rows)?;
    let items = ItemDistribution::new(counts.iter().map(|&c| c as f64).collect())?;
    Ok(TripChain {
        matrix,
        items,
        stations,
        moves,
    })
}

/// Reads trips from a CSV with header
/// `[bike_id,]start_station,end_station,start_time,end_time`.
pub fn read_trips(path: impl AsRef<Path>) -> Result<Vec<TripRecord>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}

#[derive(Deserialize)]
struct StationCountRow {
    station: String,
    count: u64,
}

/// Reads `station,count` rows.
pub fn read_station_counts(path: impl AsRef<Path>) -> Result<BTreeMap<String, u64>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<StationCountRow>() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        if out.insert(row.station.clone(), row.count).is_some() {
            return Err(Error::InvalidTrips(format!(
                "station `{}` listed twice",
                row.station
            )));
        }
    }
    Ok(out)
}

/// Writes `index,label` rows mapping dense ids back to source labels.
pub fn write_labels(path: impl AsRef<Path>, labels: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    let csv_err = |e| Error::csv(path, e);
    w.write_record(["index", "label"]).map_err(csv_err)?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string().as_str(), l])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Native matrix format: `n`, then one `u v p` line per edge in
/// lexicographic order with `p` at 17 significant digits.
pub fn write_matrix_to(mut w: impl Write, matrix: &TransitionMatrix) -> std::io::Result<()> {
    writeln!(w, "{}", matrix.n())?;
    for (e, p) in matrix.edges() {
        writeln!(w, "{} {} {:.16e}", e.from, e.to, p)?;
    }
    w.flush()
}

pub fn write_matrix(path: impl AsRef<Path>, matrix: &TransitionMatrix) -> Result<()> {
    let path = path.as_ref();
    write_matrix_to(create(path)?, matrix).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(reader: impl Read, path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push((i + 1, t.to_owned()));
        }
    }
    Ok(out)
}

fn parse_header(lines: &[(usize, String)], path: &Path) -> Result<usize> {
    let (line, text) = lines
        .first()
        .ok_or_else(|| parse_error(path, 0, "file is empty"))?;
    text.parse()
        .map_err(|_| parse_error(path, *line, format!("expected a node count, got `{text}`")))
}

pub fn parse_matrix(reader: impl Read, path: &Path) -> Result<TransitionMatrix> {
    let lines = data_lines(reader, path)?;
    let n = parse_header(&lines, path)?;
    let mut triples = Vec::with_capacity(lines.len() - 1);
    for (line, text) in &lines[1..] {
        let f: Vec<&str> = text.split_whitespace().collect();
        let bad = || parse_error(path, *line, format!("expected `u v p`, got `{text}`"));
        if f.len() != 3 {
            return Err(bad());
        }
        let u: usize = f[0].parse().map_err(|_| bad())?;
        let v: usize = f[1].parse().map_err(|_| bad())?;
        let p: f64 = f[2].parse().map_err(|_| bad())?;
        if u >= n || v >= n {
            return Err(parse_error(
                path,
                *line,
                format!("node id out of range for n = {n}"),
            ));
        }
        triples.push((u, v, p));
    }
    TransitionMatrix::from_triples(n, triples)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<TransitionMatrix> {
    let path = path.as_ref();
    parse_matrix(open(path)?, path)
}

/// Native item format: `n`, then one mass per line in shortest round-trip
/// decimal form.
pub fn write_items_to(mut w: impl Write, items: &ItemDistribution) -> std::io::Result<()> {
    writeln!(w, "{}", items.len())?;
    for x in items.as_slice() {
        writeln!(w, "{x}")?;
    }
    w.flush()
}

pub fn write_items(path: impl AsRef<Path>, items: &ItemDistribution) -> Result<()> {
    let path = path.as_ref();
    write_items_to(create(path)?, items).map_err(|e| Error::io(path, e))
}

pub fn parse_items(reader: impl Read, path: &Path) -> Result<ItemDistribution> {
    let lines = data_lines(reader, path)?;
    let n = parse_header(&lines, path)?;
    if lines.len() - 1 != n {
        return Err(parse_error(
            path,
            lines.last().map_or(0, |l| l.0),
            format!("header promises {n} masses, found {}", lines.len() - 1),
        ));
    }
    let x = lines[1..]
        .iter()
        .map(|(line, text)| {
            text.parse::<f64>()
                .map_err(|_| parse_error(path, *line, format!("expected a number, got `{text}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    ItemDistribution::new(x)
}

pub fn read_items(path: impl AsRef<Path>) -> Result<ItemDistribution> {
    let path = path.as_ref();
    parse_items(open(path)?, path)
}

/// One `(graph, distribution, algorithm, k)` cell of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub graph: String,
    pub distribution: String,
    pub algorithm: String,
    pub k: usize,
    pub objective: f64,
    pub ratio: f64,
}

pub const REPORT_HEADER: [&str; 6] = [
    "graph",
    "distribution",
    "algorithm",
    "k",
    "objective",
    "ratio",
];

/// Writes rows in the given order; the header is always present.
pub fn write_report_to(w: impl Write, rows: &[ReportRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<()> {
    let path = path.as_ref();
    write_report_to(create(path)?, rows).map_err(|e| Error::csv(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_reader(open(path)?);
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}
