//! Local community detection in geosocial networks.
//!
//! A community is grown from a query node by balancing two objectives: local
//! modularity `M` (internal over boundary edges) and spatial compactness `S`
//! (negated mean pairwise member distance). Detection keeps the set of
//! communities no other candidate beats on both objectives and expands it one
//! frontier node at a time, touching only nodes near the growing communities.
//!
//! ```
//! use geocomm::{detect, fixtures, DetectionConfig};
//!
//! let g = fixtures::toy_network();
//! let a = g.node("a").unwrap();
//! let r = detect(&g, a, &DetectionConfig::sldr()).unwrap();
//! assert!(r.community.contains(a));
//! ```

pub mod baseline;
pub mod cli;
pub mod community;
pub mod dominance;
pub mod engine;
pub mod fixtures;
pub mod geograph;
pub mod metrics;
pub mod synth;

pub use community::{Community, CommunityError, Modularity, Objectives};
pub use dominance::{dominates, filter_nondominated, Candidate};
pub use engine::{
    derive, detect, select_final, ConfigError, DetectionConfig, DetectionResult, EngineError,
    Fraction, PruneSource, TraceLevel, Variant,
};
pub use geograph::{
    AccessLog, DistanceMetric, GeoGraph, GraphAccess, GraphError, Location, NodeId, TrackedGraph,
};
pub use metrics::{MetricError, MetricReport};
pub use synth::{generate, select_query_nodes, RmatProbs, SynthConfig, SynthError};
