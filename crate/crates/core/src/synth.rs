//! Synthetic geosocial graphs: R-MAT edges plus uniform locations in `[0,1]²`.
//!
//! Randomness comes from ChaCha8 (`rand_chacha` 0.3, seeded with
//! `ChaCha8Rng::seed_from_u64`), read only through `next_u64`. Uniform floats
//! are `(x >> 11) · 2⁻⁵³`. This keeps the output byte-identical across
//! platforms for a given seed.
//!
//! Edges are drawn first. Each draw descends `⌈log₂ n⌉` levels of the
//! adjacency matrix choosing a quadrant with probabilities `(a, b, c, d)`.
//! Draws that land outside `n`, on the diagonal or on an existing edge are
//! rejected, so the graph ends with exactly the requested number of edges.
//! Locations are then drawn node by node, `x` before `y`.

use std::collections::HashSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geograph::{DistanceMetric, GeoGraph, Location, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("R-MAT probabilities must be non-negative and sum to 1, got {0:?}")]
    InvalidProbabilities([f64; 4]),
    #[error("graph needs at least one node")]
    NoNodes,
    #[error("{edges} edges do not fit in a simple graph on {nodes} nodes")]
    TooManyEdges { nodes: usize, edges: usize },
    #[error("gave up after {attempts} draws with {placed} of {wanted} edges placed")]
    Exhausted {
        attempts: u64,
        placed: usize,
        wanted: usize,
    },
    #[error("requested {count} query nodes from a graph of {nodes}")]
    TooManyQueries { count: usize, nodes: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmatProbs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RmatProbs {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, SynthError> {
        let p = [a, b, c, d];
        let sum: f64 = p.iter().sum();
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SynthError::InvalidProbabilities(p));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

impl Default for RmatProbs {
    /// GTGraph's R-MAT defaults.
    fn default() -> Self {
        Self { a: 0.45, b: 0.15, c: 0.15, d: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub probs: RmatProbs,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_nodes: usize, n_edges: usize, seed: u64) -> Self {
        Self {
            n_nodes,
            n_edges,
            probs: RmatProbs::default(),
            seed,
        }
    }

    /// 5000 nodes, 20000 edges.
    pub fn syn1(seed: u64) -> Self {
        Self::new(5000, 20000, seed)
    }
}

pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn generate(cfg: &SynthConfig) -> Result<GeoGraph, SynthError> {
    let n = cfg.n_nodes;
    if n == 0 {
        return Err(SynthError::NoNodes);
    }
    RmatProbs::new(cfg.probs.a, cfg.probs.b, cfg.probs.c, cfg.probs.d)?;
    let capacity = n as u128 * (n as u128 - 1) / 2;
    if cfg.n_edges as u128 > capacity {
        return Err(SynthError::TooManyEdges { nodes: n, edges: cfg.n_edges });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let levels = usize::BITS - (n - 1).leading_zeros();
    let [a, b, c, _] = cfg.probs.as_array();
    let (ab, abc) = (a + b, a + b + c);

    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(cfg.n_edges);
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(cfg.n_edges);
    let max_attempts = 1000 * cfg.n_edges as u64 + 1_000_000;
    let mut attempts = 0u64;
    while edges.len() < cfg.n_edges {
        if attempts == max_attempts {
            return Err(SynthError::Exhausted {
                attempts,
                placed: edges.len(),
                wanted: cfg.n_edges,
            });
        }
        attempts += 1;
        let (mut row, mut col) = (0usize, 0usize);
        for _ in 0..levels {
            let r = unit(&mut rng);
            let (dr, dc) = if r < a {
                (0, 0)
            } else if r < ab {
                (0, 1)
            } else if r < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            row = row * 2 + dr;
            col = col * 2 + dc;
        }
        if row >= n || col >= n || row == col {
            continue;
        }
        let e = (row.min(col), row.max(col));
        if seen.insert(e) {
            edges.push(e);
        }
    }

    let nodes = (0..n)
        .map(|i| {
            let x = unit(&mut rng);
            let y = unit(&mut rng);
            (i.to_string(), Location::new(x, y))
        })
        .collect();
    Ok(GeoGraph::from_parts(nodes, edges, DistanceMetric::Euclidean))
}

/// Even-stride sample: the nodes at sorted positions `⌊k·|V|/count⌋`.
pub fn select_query_nodes(g: &GeoGraph, count: usize) -> Result<Vec<NodeId>, SynthError> {
    let n = g.node_count();
    if count > n {
        return Err(SynthError::TooManyQueries { count, nodes: n });
    }
    Ok((0..count)
        .map(|k| NodeId((k as u128 * n as u128 / count as u128) as u32))
        .collect())
}
