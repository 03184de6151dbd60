//! Command-line front end: `gen`, `detect`, `batch` and `eval`.
//!
//! Every command writes line-delimited JSON. Exit codes are 0 on success, 2
//! for usage or validation errors and 3 for data errors (unreadable or
//! malformed input, unknown nodes).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::{Community, CommunityError};
use crate::engine::{detect, ConfigError, DetectionConfig, DetectionResult, EngineError, Fraction, PruneSource, Variant};
use crate::geograph::{DistanceMetric, GeoGraph, GraphError, EDGE_FILE, LOCATION_FILE};
use crate::metrics::{MetricError, MetricReport};
use crate::synth::{self, RmatProbs, SynthConfig, SynthError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const WORKERS_ENV: &str = "GEOCOMM_WORKERS";
pub const DEFAULT_BUDGET_SECS: f64 = 600.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Community(#[from] CommunityError),
    #[error("{0}")]
    Usage(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: not a valid record")]
    BadRecord { path: PathBuf, line: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Synth(SynthError::InvalidProbabilities(_))
            | CliError::Synth(SynthError::NoNodes)
            | CliError::Synth(SynthError::TooManyEdges { .. })
            | CliError::Synth(SynthError::TooManyQueries { .. }) => 2,
            _ => 3,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Graph(GraphError::UnknownNode(n)) => CliError::UnknownNode(n),
            EngineError::Graph(g) => CliError::Graph(g),
            EngineError::Config(c) => CliError::Config(c),
            EngineError::EmptyPool => CliError::Usage(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "geocomm", version, about = "Spatial-aware local community detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic R-MAT graph with uniform locations in [0,1]².
    Gen(GenArgs),
    /// Detect the community of one query node.
    Detect(DetectArgs),
    /// Detect communities for evenly spaced query nodes.
    Batch(BatchArgs),
    /// Recompute metrics for a stored community.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub nodes: usize,
    #[arg(long)]
    pub edges: usize,
    /// Quadrant probabilities `a,b,c,d`.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Directory holding edges.txt and locations.txt.
    #[arg(long, required_unless_present_all = ["edge_file", "location_file"])]
    pub graph: Option<PathBuf>,
    #[arg(long, conflicts_with = "graph", requires = "location_file")]
    pub edge_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "graph", requires = "edge_file")]
    pub location_file: Option<PathBuf>,
    /// `euclidean` or `haversine`.
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
}

impl GraphArgs {
    pub fn load(&self) -> Result<GeoGraph, CliError> {
        let metric: DistanceMetric = self
            .metric
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown metric `{}`", self.metric)))?;
        let (edges, locations) = match &self.graph {
            Some(dir) => (dir.join(EDGE_FILE), dir.join(LOCATION_FILE)),
            None => (
                self.edge_file.clone().expect("enforced by clap"),
                self.location_file.clone().expect("enforced by clap"),
            ),
        };
        Ok(GeoGraph::load(edges, locations, metric)?)
    }
}

#[derive(Debug, Args)]
pub struct AlgoArgs {
    /// `sldr`, `appsldr` or `mgreedy`.
    #[arg(long, default_value = "appsldr")]
    pub algo: String,
    /// Per-node time budget in seconds.
    #[arg(long, default_value_t = DEFAULT_BUDGET_SECS)]
    pub budget: f64,
    /// Share of the frontier expanded by appsldr, `p/q` or decimal.
    #[arg(long)]
    pub frac: Option<String>,
    /// Frontier size the pruned count is taken from: `own` or `parent`.
    #[arg(long, default_value = "own")]
    pub prune_source: String,
    #[arg(long)]
    pub max_size: Option<usize>,
}

impl AlgoArgs {
    pub fn config(&self) -> Result<DetectionConfig, CliError> {
        let variant: Variant = self.algo.parse()?;
        let mut cfg = DetectionConfig::new(variant);
        if let Some(f) = &self.frac {
            cfg.prune_fraction = f.parse::<Fraction>()?;
        }
        cfg.prune_source = self.prune_source.parse::<PruneSource>()?;
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(CliError::Usage(format!("invalid budget {}", self.budget)));
        }
        cfg.budget = Duration::from_secs_f64(self.budget);
        cfg.max_community_size = self.max_size;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Query node label.
    #[arg(long)]
    pub node: String,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Number of evenly spaced query nodes.
    #[arg(long)]
    pub count: usize,
    /// Results file.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep complete records already in the results file and run the rest.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// File listing member labels, separated by whitespace.
    #[arg(long)]
    pub community: PathBuf,
}

/// Metric value or the reason it was skipped.
fn split_metric(
    name: &str,
    value: Result<f64, MetricError>,
    skips: &mut BTreeMap<String, String>,
) -> Option<f64> {
    match value {
        Ok(v) if v.is_finite() => Some(v),
        Ok(_) => {
            skips.insert(name.to_string(), "non_finite".to_string());
            None
        }
        Err(e) => {
            skips.insert(name.to_string(), e.code().to_string());
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricFields {
    pub communitude: Option<f64>,
    pub d_avg: Option<f64>,
    pub d_io: Option<f64>,
    pub expansion: Option<f64>,
    pub skip_reasons: BTreeMap<String, String>,
}

impl MetricFields {
    pub fn evaluate(g: &GeoGraph, c: &Community) -> Self {
        let r = MetricReport::evaluate(g, c);
        let mut skips = BTreeMap::new();
        Self {
            communitude: split_metric("communitude", r.communitude, &mut skips),
            d_avg: split_metric("d_avg", r.d_avg, &mut skips),
            d_io: split_metric("d_io", r.d_io, &mut skips),
            expansion: split_metric("expansion", Ok(r.expansion), &mut skips),
            skip_reasons: skips,
        }
    }
}

/// One detection, as written by `detect` and `batch`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub algo: String,
    pub node: String,
    pub members: Vec<String>,
    pub m_num: u64,
    pub m_den: u64,
    /// `null` when `m_den` is 0.
    pub m: Option<f64>,
    /// `null` for a single-member community.
    pub s: Option<f64>,
    pub communitude: Option<f64>,
    pub d_avg: Option<f64>,
    pub d_io: Option<f64>,
    pub expansion: Option<f64>,
    pub iterations: usize,
    pub derived_total: usize,
    pub runtime_s: f64,
    pub timed_out: bool,
    pub accessed_nodes: usize,
    pub skip_reasons: BTreeMap<String, String>,
}

impl ResultRecord {
    pub fn new(g: &GeoGraph, r: &DetectionResult) -> Self {
        let c = &r.community;
        let m = c.modularity();
        let s = c.spatial();
        let metrics = MetricFields::evaluate(g, c);
        Self {
            algo: r.variant.name().to_string(),
            node: g.label(r.query).to_string(),
            members: c.members().iter().map(|&v| g.label(v).to_string()).collect(),
            m_num: c.internal_edges(),
            m_den: c.boundary_edges(),
            m: (!m.is_infinite()).then(|| m.value()),
            s: s.is_finite().then_some(s),
            communitude: metrics.communitude,
            d_avg: metrics.d_avg,
            d_io: metrics.d_io,
            expansion: metrics.expansion,
            iterations: r.iterations,
            derived_total: r.derived_total,
            runtime_s: r.runtime.as_secs_f64(),
            timed_out: r.timed_out,
            accessed_nodes: r.accessed_nodes,
            skip_reasons: metrics.skip_reasons,
        }
    }

    /// JSON line with `runtime_s` zeroed, for reproducibility comparisons.
    pub fn to_stable_json(&self) -> String {
        let mut copy = self.clone();
        copy.runtime_s = 0.0;
        serde_json::to_string(&copy).expect("record serialises")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureRecord {
    pub algo: String,
    pub node: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchLine {
    Result(Box<ResultRecord>),
    Failure(FailureRecord),
}

impl BatchLine {
    pub fn node(&self) -> &str {
        match self {
            BatchLine::Result(r) => &r.node,
            BatchLine::Failure(f) => &f.node,
        }
    }

    pub fn algo(&self) -> &str {
        match self {
            BatchLine::Result(r) => &r.algo,
            BatchLine::Failure(f) => &f.algo,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub communitude: Option<f64>,
    pub d_avg: Option<f64>,
    pub d_io: Option<f64>,
    pub expansion: Option<f64>,
    pub iterations: Option<f64>,
    pub derived_total: Option<f64>,
    pub accessed_nodes: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algo: String,
    pub count: usize,
    pub completed: usize,
    pub failures: usize,
    pub timed_out: usize,
    /// Arithmetic means over the records that have a value.
    pub means: Means,
    /// Per metric, how many records skipped it.
    pub skips: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub summary: Summary,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl Summary {
    pub fn from_lines(algo: &str, count: usize, lines: &[BatchLine]) -> Self {
        let results: Vec<&ResultRecord> = lines
            .iter()
            .filter_map(|l| match l {
                BatchLine::Result(r) => Some(r.as_ref()),
                BatchLine::Failure(_) => None,
            })
            .collect();
        let mut skips = BTreeMap::new();
        for r in &results {
            for k in r.skip_reasons.keys() {
                *skips.entry(k.clone()).or_insert(0) += 1;
            }
        }
        let field = |f: fn(&ResultRecord) -> Option<f64>| mean(results.iter().filter_map(|r| f(r)));
        Self {
            algo: algo.to_string(),
            count,
            completed: results.len(),
            failures: lines.len() - results.len(),
            timed_out: results.iter().filter(|r| r.timed_out).count(),
            means: Means {
                communitude: field(|r| r.communitude),
                d_avg: field(|r| r.d_avg),
                d_io: field(|r| r.d_io),
                expansion: field(|r| r.expansion),
                iterations: field(|r| Some(r.iterations as f64)),
                derived_total: field(|r| Some(r.derived_total as f64)),
                accessed_nodes: field(|r| Some(r.accessed_nodes as f64)),
            },
            skips,
        }
    }
}

/// Community evaluated by `eval`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub members: Vec<String>,
    pub communitude: Option<f64>,
    pub d_avg: Option<f64>,
    pub d_io: Option<f64>,
    pub expansion: Option<f64>,
    pub skip_reasons: BTreeMap<String, String>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(&a, err),
        Command::Detect(a) => cmd_detect(&a, out),
        Command::Batch(a) => cmd_batch(&a, err),
        Command::Eval(a) => cmd_eval(&a, out),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_line(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let line = serde_json::to_string(value).expect("records serialise");
    writeln!(out, "{line}").map_err(io_err(Path::new("<stdout>")))
}

pub fn cmd_gen(a: &GenArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let probs = match &a.probs {
        Some(p) if p.len() == 4 => RmatProbs::new(p[0], p[1], p[2], p[3])?,
        Some(p) => {
            return Err(CliError::Usage(format!(
                "--probs takes 4 values, got {}",
                p.len()
            )))
        }
        None => RmatProbs::default(),
    };
    if a.nodes > 0 && a.edges < a.nodes - 1 {
        let _ = writeln!(
            err,
            "warning: {} edges cannot connect {} nodes",
            a.edges, a.nodes
        );
    }
    let cfg = SynthConfig {
        n_nodes: a.nodes,
        n_edges: a.edges,
        probs,
        seed: a.seed,
    };
    let g = synth::generate(&cfg)?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    g.write_files(&a.out).map_err(io_err(&a.out))?;
    let manifest = serde_json::json!({
        "generator": "rmat",
        "nodes": cfg.n_nodes,
        "edges": cfg.n_edges,
        "probs": cfg.probs.as_array(),
        "seed": cfg.seed,
        "rng": synth::RNG_NAME,
        "version": env!("CARGO_PKG_VERSION"),
        "edge_file": EDGE_FILE,
        "location_file": LOCATION_FILE,
    });
    let path = a.out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
    fs::write(&path, text).map_err(io_err(&path))
}

pub fn cmd_detect(a: &DetectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.algo.config()?;
    let g = a.graph.load()?;
    let v = g
        .node(&a.node)
        .ok_or_else(|| CliError::UnknownNode(a.node.clone()))?;
    let r = detect(&g, v, &cfg)?;
    write_line(out, &ResultRecord::new(&g, &r))
}

/// Complete records already in `path` for the expected node sequence; a
/// torn or foreign line ends the prefix.
fn read_prefix(path: &Path, algo: &str, expected: &[String]) -> Result<Vec<BatchLine>, CliError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut kept = Vec::new();
    for line in BufReader::new(file).lines() {
        let Ok(line) = line else { break };
        let Ok(rec) = serde_json::from_str::<BatchLine>(&line) else { break };
        if kept.len() == expected.len() || rec.node() != expected[kept.len()] || rec.algo() != algo {
            break;
        }
        kept.push(rec);
    }
    Ok(kept)
}

fn workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

pub fn cmd_batch(a: &BatchArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.algo.config()?;
    let g = a.graph.load()?;
    let queries = synth::select_query_nodes(&g, a.count)?;
    let labels: Vec<String> = queries.iter().map(|&v| g.label(v).to_string()).collect();
    let algo = cfg.variant.name();

    let mut lines = if a.resume {
        read_prefix(&a.out, algo, &labels)?
    } else {
        Vec::new()
    };
    if !lines.is_empty() {
        let _ = writeln!(err, "resuming after {} of {} nodes", lines.len(), a.count);
    }

    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(&a.out)
        .map_err(io_err(&a.out))?;
    let mut w = BufWriter::new(file);
    for l in &lines {
        write_line(&mut w, l)?;
    }
    w.flush().map_err(io_err(&a.out))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers())
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let chunk = pool.current_num_threads();
    let remaining = &queries[lines.len()..];
    for part in remaining.chunks(chunk) {
        let batch: Vec<BatchLine> = pool.install(|| {
            part.par_iter()
                .map(|&v| match detect(&g, v, &cfg) {
                    Ok(r) => BatchLine::Result(Box::new(ResultRecord::new(&g, &r))),
                    Err(e) => BatchLine::Failure(FailureRecord {
                        algo: algo.to_string(),
                        node: g.label(v).to_string(),
                        error: e.to_string(),
                    }),
                })
                .collect()
        });
        for l in batch {
            write_line(&mut w, &l)?;
            lines.push(l);
        }
        w.flush().map_err(io_err(&a.out))?;
    }

    let summary = SummaryLine {
        summary: Summary::from_lines(algo, a.count, &lines),
    };
    write_line(&mut w, &summary)?;
    w.flush().map_err(io_err(&a.out))
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = a.graph.load()?;
    let text = fs::read_to_string(&a.community).map_err(io_err(&a.community))?;
    let mut ids = Vec::new();
    for line in text.lines() {
        let data = line.split('#').next().unwrap_or("");
        for label in data.split_whitespace() {
            ids.push(
                g.node(label)
                    .ok_or_else(|| CliError::UnknownNode(label.to_string()))?,
            );
        }
    }
    ids.sort_unstable();
    ids.dedup();
    let c = Community::from_members(&g, &ids)?;
    let m = MetricFields::evaluate(&g, &c);
    write_line(
        out,
        &EvalRecord {
            members: c.members().iter().map(|&v| g.label(v).to_string()).collect(),
            communitude: m.communitude,
            d_avg: m.d_avg,
            d_io: m.d_io,
            expansion: m.expansion,
            skip_reasons: m.skip_reasons,
        },
    )
}
