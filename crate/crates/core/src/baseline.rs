//! Structural-only greedy baseline.
//!
//! Starting from the query node, repeatedly add the frontier node that yields
//! the largest local modularity, accepting it only if modularity strictly
//! increases. Ties go to the smaller node id. There is no deletion phase.

use std::time::Instant;

use crate::community::{count_common, Community, Modularity};
use crate::engine::{DetectionConfig, DetectionResult, EngineError, TraceLevel};
use crate::geograph::{GeoGraph, GraphAccess, NodeId, TrackedGraph};

pub fn detect_mgreedy(
    g: &GeoGraph,
    v: NodeId,
    cfg: &DetectionConfig,
) -> Result<DetectionResult, EngineError> {
    g.check(v)?;
    let start = Instant::now();
    let deadline = cfg.deadline(start);
    let view = TrackedGraph::new(g);

    let mut current = Community::singleton(&view, v);
    let mut steps = 0;
    let mut evaluated = 0;
    let mut timed_out = false;

    loop {
        if cfg.max_community_size.is_some_and(|max| current.len() >= max) {
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out = true;
            break;
        }
        let m = current.modularity();
        let mut best: Option<(Modularity, NodeId)> = None;
        for &u in current.frontier() {
            evaluated += 1;
            let candidate = modularity_with(&view, &current, u);
            // frontier is sorted, so strict `>` keeps the smallest id on ties
            if best.is_none_or(|(b, _)| candidate > b) {
                best = Some((candidate, u));
            }
        }
        match best {
            Some((next, u)) if next > m => {
                current = current
                    .expand(&view, u)
                    .expect("candidate is drawn from the frontier");
                steps += 1;
            }
            _ => break,
        }
    }

    Ok(DetectionResult {
        query: v,
        variant: cfg.variant,
        community: current,
        iterations: steps,
        derived_total: evaluated,
        runtime: start.elapsed(),
        timed_out,
        nd_final_size: 1,
        accessed_nodes: view.log().len(),
        touched: (cfg.trace > TraceLevel::Off).then(|| view.log().touched()),
        trace: Vec::new(),
    })
}

/// Modularity of `c ∪ {u}` without building the community.
fn modularity_with<G: GraphAccess>(g: &G, c: &Community, u: NodeId) -> Modularity {
    let nbrs = g.neighbors(u);
    let k = count_common(nbrs, c.members()) as u64;
    Modularity::new(
        c.internal_edges() + k,
        c.boundary_edges() - k + (nbrs.len() as u64 - k),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geograph::{DistanceMetric, Location};

    fn graph(n: usize, edges: &[(usize, usize)]) -> GeoGraph {
        GeoGraph::from_parts(
            (0..n).map(|i| (i.to_string(), Location::new(i as f64, 0.0))).collect(),
            edges.iter().copied(),
            DistanceMetric::Euclidean,
        )
    }

    #[test]
    fn isolated_dyad() {
        let g = graph(2, &[(0, 1)]);
        let r = detect_mgreedy(&g, NodeId(1), &DetectionConfig::mgreedy()).unwrap();
        assert_eq!(r.community.members(), &[NodeId(0), NodeId(1)]);
        assert!(r.community.modularity().is_infinite());
    }

    #[test]
    fn star_grows_to_whole_star() {
        // M along the way: 0, 1/3, 2/2, 3/1, 4/0
        let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let r = detect_mgreedy(&g, NodeId(0), &DetectionConfig::mgreedy()).unwrap();
        assert_eq!(r.community.len(), 5);
        assert_eq!(r.iterations, 4);
        assert!(r.community.modularity().is_infinite());
    }

    #[test]
    fn stops_without_strict_improvement() {
        // path 0-1-2-3: {1} has m = 0; adding 0 gives 1/1, adding 2 gives 1/2
        // then {0,1} + 2 gives 2/1, + 3 gives 3/0
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let r = detect_mgreedy(&g, NodeId(1), &DetectionConfig::mgreedy()).unwrap();
        assert_eq!(r.community.len(), 4);

        // two triangles joined by a bridge 2-3: greedy from 0 stops at its triangle
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]);
        let r = detect_mgreedy(&g, NodeId(0), &DetectionConfig::mgreedy()).unwrap();
        assert_eq!(r.community.members(), &[NodeId(0), NodeId(1), NodeId(2)]);
    }
}
