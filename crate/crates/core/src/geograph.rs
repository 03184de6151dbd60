//! Geosocial graph: an undirected simple graph whose nodes carry 2-D coordinates.
//!
//! External node labels are remapped to dense [`NodeId`]s. Labels are ordered
//! numerically when every label parses as an unsigned integer and
//! lexicographically otherwise, so the same input files always produce the same
//! ids regardless of line order.
//!
//! Detection code never talks to [`GeoGraph`] directly; it goes through the
//! [`GraphAccess`] trait. [`TrackedGraph`] implements that trait while recording
//! every node whose adjacency or location was read, which is how a run proves
//! it only used local information.

use std::cell::Cell;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

/// Mean Earth radius in kilometres (IUGG).
const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Dense internal node identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// How coordinates are turned into distances.
///
/// `Haversine` reads `x` as latitude and `y` as longitude, both in degrees,
/// and returns great-circle kilometres.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Haversine,
}

impl DistanceMetric {
    pub fn between(self, a: Location, b: Location) -> f64 {
        match self {
            DistanceMetric::Euclidean => {
                let dx = a.x - b.x;
                let dy = a.y - b.y;
                (dx * dx + dy * dy).sqrt()
            }
            DistanceMetric::Haversine => {
                let (lat1, lat2) = (a.x.to_radians(), b.x.to_radians());
                let dlat = lat2 - lat1;
                let dlon = (b.y - a.y).to_radians();
                let h = (dlat / 2.0).sin().powi(2)
                    + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
                2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
            }
        }
    }
}

impl FromStr for DistanceMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(DistanceMetric::Euclidean),
            "haversine" => Ok(DistanceMetric::Haversine),
            other => Err(format!("unknown distance metric `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("node `{0}` appears in the edge list but has no location")]
    MissingLocation(String),
    #[error("node `{0}` has a location but does not appear in the edge list")]
    MissingEdgeEntry(String),
    #[error("node `{0}` has more than one location")]
    DuplicateLocation(String),
    #[error("graph has no nodes")]
    Empty,
    #[error("unknown node {0}")]
    UnknownNode(String),
}

/// Read-only view of a geosocial graph used by the detection code.
///
/// Methods take ids produced by the same graph; an id from elsewhere is a
/// programming error and panics.
pub trait GraphAccess {
    /// Sorted neighbour list of `v`.
    fn neighbors(&self, v: NodeId) -> &[NodeId];

    fn degree(&self, v: NodeId) -> usize {
        self.neighbors(v).len()
    }

    fn location(&self, v: NodeId) -> Location;

    fn metric(&self) -> DistanceMetric;

    fn distance(&self, i: NodeId, j: NodeId) -> f64 {
        self.metric().between(self.location(i), self.location(j))
    }
}

#[derive(Clone, Debug)]
pub struct GeoGraph {
    adjacency: Vec<Vec<NodeId>>,
    locations: Vec<Location>,
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    metric: DistanceMetric,
    edge_count: usize,
}

impl GeoGraph {
    /// Builds a graph from located nodes and index pairs into `nodes`.
    ///
    /// Node ids follow the order of `nodes`. Self-loops and repeated edges are
    /// dropped. Panics if an edge references an index out of range or if two
    /// nodes share a label.
    pub fn from_parts(
        nodes: Vec<(String, Location)>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        metric: DistanceMetric,
    ) -> Self {
        let n = nodes.len();
        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if u == v {
                continue;
            }
            adjacency[u].push(NodeId(v as u32));
            adjacency[v].push(NodeId(u as u32));
        }
        let mut edge_count = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        let mut labels = Vec::with_capacity(n);
        let mut locations = Vec::with_capacity(n);
        let mut index = HashMap::with_capacity(n);
        for (i, (label, loc)) in nodes.into_iter().enumerate() {
            let prev = index.insert(label.clone(), NodeId(i as u32));
            assert!(prev.is_none(), "duplicate node label `{label}`");
            labels.push(label);
            locations.push(loc);
        }
        Self {
            adjacency,
            locations,
            labels,
            index,
            metric,
            edge_count: edge_count / 2,
        }
    }

    /// Loads an edge file and a location file (see the crate README for the
    /// grammar).
    pub fn load(
        edge_path: impl AsRef<Path>,
        location_path: impl AsRef<Path>,
        metric: DistanceMetric,
    ) -> Result<Self, GraphError> {
        let edge_path = edge_path.as_ref();
        let location_path = location_path.as_ref();
        let edge_text = read(edge_path)?;
        let loc_text = read(location_path)?;

        let mut edges: Vec<(&str, &str)> = Vec::new();
        let mut in_edges: HashSet<&str> = HashSet::new();
        for (lineno, fields) in data_lines(&edge_text) {
            if fields.len() != 2 {
                return Err(GraphError::Malformed {
                    path: edge_path.to_path_buf(),
                    line: lineno,
                    message: format!("expected 2 node labels, found {}", fields.len()),
                });
            }
            in_edges.insert(fields[0]);
            in_edges.insert(fields[1]);
            edges.push((fields[0], fields[1]));
        }

        let mut locs: HashMap<&str, Location> = HashMap::new();
        for (lineno, fields) in data_lines(&loc_text) {
            if fields.len() != 3 {
                return Err(GraphError::Malformed {
                    path: location_path.to_path_buf(),
                    line: lineno,
                    message: format!("expected `label x y`, found {} fields", fields.len()),
                });
            }
            let coord = |s: &str| -> Result<f64, GraphError> {
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(GraphError::Malformed {
                        path: location_path.to_path_buf(),
                        line: lineno,
                        message: format!("invalid coordinate `{s}`"),
                    }),
                }
            };
            let loc = Location::new(coord(fields[1])?, coord(fields[2])?);
            if let Some(prev) = locs.insert(fields[0], loc) {
                if prev != loc {
                    return Err(GraphError::DuplicateLocation(fields[0].to_string()));
                }
            }
        }

        let mut labels: Vec<&str> = in_edges.iter().copied().collect();
        sort_labels(&mut labels);
        if let Some(missing) = labels.iter().find(|l| !locs.contains_key(*l)) {
            return Err(GraphError::MissingLocation(missing.to_string()));
        }
        let mut orphans: Vec<&str> = locs
            .keys()
            .copied()
            .filter(|l| !in_edges.contains(l))
            .collect();
        if !orphans.is_empty() {
            sort_labels(&mut orphans);
            return Err(GraphError::MissingEdgeEntry(orphans[0].to_string()));
        }
        if labels.is_empty() {
            return Err(GraphError::Empty);
        }

        let position: HashMap<&str, usize> =
            labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let nodes = labels
            .iter()
            .map(|l| (l.to_string(), locs[l]))
            .collect::<Vec<_>>();
        let pairs = edges
            .into_iter()
            .map(|(u, v)| (position[u], position[v]))
            .collect::<Vec<_>>();
        Ok(Self::from_parts(nodes, pairs, metric))
    }

    /// Writes the edge file. Each undirected edge appears once as `u v` with
    /// `u < v`; an isolated node is written as a self-loop line so that it
    /// survives a reload.
    pub fn write_edges(&self, mut out: impl Write) -> io::Result<()> {
        for (u, list) in self.adjacency.iter().enumerate() {
            let label = &self.labels[u];
            if list.is_empty() {
                writeln!(out, "{label} {label}")?;
                continue;
            }
            for v in list.iter().filter(|v| v.index() > u) {
                writeln!(out, "{label} {}", self.labels[v.index()])?;
            }
        }
        Ok(())
    }

    pub fn write_locations(&self, mut out: impl Write) -> io::Result<()> {
        for (label, loc) in self.labels.iter().zip(&self.locations) {
            writeln!(out, "{label} {} {}", loc.x, loc.y)?;
        }
        Ok(())
    }

    /// Writes `edges.txt` and `locations.txt` into `dir`, creating it if needed.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut edges = Vec::new();
        self.write_edges(&mut edges)?;
        fs::write(dir.join(EDGE_FILE), edges)?;
        let mut locs = Vec::new();
        self.write_locations(&mut locs)?;
        fs::write(dir.join(LOCATION_FILE), locs)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.adjacency.len() as u32).map(NodeId)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.index() < self.adjacency.len()
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v.index()]
    }

    pub fn check(&self, v: NodeId) -> Result<NodeId, GraphError> {
        if self.contains(v) {
            Ok(v)
        } else {
            Err(GraphError::UnknownNode(v.to_string()))
        }
    }

    pub fn try_neighbors(&self, v: NodeId) -> Result<&[NodeId], GraphError> {
        self.check(v).map(|v| self.neighbors(v))
    }

    pub fn try_distance(&self, i: NodeId, j: NodeId) -> Result<f64, GraphError> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.distance(i, j))
    }

    pub fn with_metric(mut self, metric: DistanceMetric) -> Self {
        self.metric = metric;
        self
    }
}

impl GraphAccess for GeoGraph {
    #[inline]
    fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v.index()]
    }

    #[inline]
    fn location(&self, v: NodeId) -> Location {
        self.locations[v.index()]
    }

    fn metric(&self) -> DistanceMetric {
        self.metric
    }
}

pub const EDGE_FILE: &str = "edges.txt";
pub const LOCATION_FILE: &str = "locations.txt";

fn read(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-empty, non-comment lines with 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

fn sort_labels(labels: &mut [&str]) {
    if labels.iter().all(|l| l.parse::<u64>().is_ok()) {
        labels.sort_unstable_by_key(|l| l.parse::<u64>().unwrap());
    } else {
        labels.sort_unstable();
    }
}

/// Set of nodes whose adjacency or location was read during one run.
#[derive(Debug)]
pub struct AccessLog {
    words: Vec<Cell<u64>>,
    count: Cell<usize>,
}

impl AccessLog {
    pub fn new(node_count: usize) -> Self {
        Self {
            words: (0..node_count.div_ceil(64)).map(|_| Cell::new(0)).collect(),
            count: Cell::new(0),
        }
    }

    #[inline]
    pub fn touch(&self, v: NodeId) {
        let word = &self.words[v.index() / 64];
        let bit = 1u64 << (v.index() % 64);
        let w = word.get();
        if w & bit == 0 {
            word.set(w | bit);
            self.count.set(self.count.get() + 1);
        }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.words[v.index() / 64].get() & (1u64 << (v.index() % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.count.get()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn touched(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        for (w, word) in self.words.iter().enumerate() {
            let mut bits = word.get();
            while bits != 0 {
                let b = bits.trailing_zeros();
                out.push(NodeId((w * 64) as u32 + b));
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn reset(&self) {
        for w in &self.words {
            w.set(0);
        }
        self.count.set(0);
    }
}

/// A [`GeoGraph`] view that logs every node it is asked about.
#[derive(Debug)]
pub struct TrackedGraph<'g> {
    graph: &'g GeoGraph,
    log: AccessLog,
}

impl<'g> TrackedGraph<'g> {
    pub fn new(graph: &'g GeoGraph) -> Self {
        Self {
            graph,
            log: AccessLog::new(graph.node_count()),
        }
    }

    pub fn log(&self) -> &AccessLog {
        &self.log
    }

    pub fn graph(&self) -> &'g GeoGraph {
        self.graph
    }
}

impl GraphAccess for TrackedGraph<'_> {
    #[inline]
    fn neighbors(&self, v: NodeId) -> &[NodeId] {
        self.log.touch(v);
        self.graph.neighbors(v)
    }

    #[inline]
    fn location(&self, v: NodeId) -> Location {
        self.log.touch(v);
        self.graph.location(v)
    }

    fn metric(&self) -> DistanceMetric {
        self.graph.metric
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn euclidean_345() {
        let d = DistanceMetric::Euclidean.between(Location::new(0.0, 0.0), Location::new(3.0, 4.0));
        assert_eq!(d, 5.0);
    }

    #[test]
    fn haversine_quarter_meridian() {
        let d = DistanceMetric::Haversine.between(Location::new(0.0, 0.0), Location::new(90.0, 0.0));
        let expected = EARTH_RADIUS_KM * std::f64::consts::FRAC_PI_2;
        assert!((d - expected).abs() < 1e-9);
        let same = DistanceMetric::Haversine.between(Location::new(12.5, 40.0), Location::new(12.5, 40.0));
        assert_eq!(same, 0.0);
    }

    #[test]
    fn self_loop_dropped_but_node_kept() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e", "# comment\n1 2\n3 3\n2 1\n1 2\n");
        let l = write(dir.path(), "l", "1 0 0\n2 1 0\n3 5 5\n");
        let g = GeoGraph::load(&e, &l, DistanceMetric::Euclidean).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 1);
        let three = g.node("3").unwrap();
        assert!(g.neighbors(three).is_empty());
        let one = g.node("1").unwrap();
        assert_eq!(g.neighbors(one), &[g.node("2").unwrap()]);
    }

    #[test]
    fn missing_location_names_node() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e", "0 4\n");
        let l = write(dir.path(), "l", "0 0 0\n");
        let err = GeoGraph::load(&e, &l, DistanceMetric::Euclidean).unwrap_err();
        assert!(matches!(err, GraphError::MissingLocation(ref n) if n == "4"), "{err}");
        assert!(err.to_string().contains('4'));
    }

    #[test]
    fn location_without_edge_entry_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e", "0 1\n");
        let l = write(dir.path(), "l", "0 0 0\n1 0 1\n7 3 3\n");
        let err = GeoGraph::load(&e, &l, DistanceMetric::Euclidean).unwrap_err();
        assert!(matches!(err, GraphError::MissingEdgeEntry(ref n) if n == "7"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e", "0 1\n\n0 1 2\n");
        let l = write(dir.path(), "l", "0 0 0\n1 0 1\n");
        match GeoGraph::load(&e, &l, DistanceMetric::Euclidean).unwrap_err() {
            GraphError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let e = write(dir.path(), "e2", "0 1\n");
        let l = write(dir.path(), "l2", "0 0 0\n1 zero 1\n");
        match GeoGraph::load(&e, &l, DistanceMetric::Euclidean).unwrap_err() {
            GraphError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_graph_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e", "# nothing\n");
        let l = write(dir.path(), "l", "");
        assert!(matches!(
            GeoGraph::load(&e, &l, DistanceMetric::Euclidean),
            Err(GraphError::Empty)
        ));
    }

    #[test]
    fn labels_order_numerically() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e", "10 9\n9 100\n");
        let l = write(dir.path(), "l", "100 0 0\n9 1 1\n10 2 2\n");
        let g = GeoGraph::load(&e, &l, DistanceMetric::Euclidean).unwrap();
        let labels: Vec<_> = g.nodes().map(|v| g.label(v).to_string()).collect();
        assert_eq!(labels, ["9", "10", "100"]);
    }

    #[test]
    fn unknown_node_is_error() {
        let g = GeoGraph::from_parts(
            vec![("x".into(), Location::new(0.0, 0.0))],
            [],
            DistanceMetric::Euclidean,
        );
        assert!(g.try_neighbors(NodeId(3)).is_err());
        assert!(g.try_distance(NodeId(0), NodeId(1)).is_err());
        assert_eq!(g.try_distance(NodeId(0), NodeId(0)).unwrap(), 0.0);
    }

    #[test]
    fn tracked_graph_logs_reads() {
        let g = GeoGraph::from_parts(
            (0..4).map(|i| (i.to_string(), Location::new(i as f64, 0.0))).collect(),
            [(0, 1), (1, 2), (2, 3)],
            DistanceMetric::Euclidean,
        );
        let t = TrackedGraph::new(&g);
        assert!(t.log().is_empty());
        t.neighbors(NodeId(1));
        t.distance(NodeId(1), NodeId(3));
        assert_eq!(t.log().touched(), vec![NodeId(1), NodeId(3)]);
        assert_eq!(t.log().len(), 2);
        t.log().reset();
        assert!(t.log().is_empty());
    }
}
