//! Post-hoc quality metrics for a detected community.
//!
//! Unlike detection, evaluation may read global facts such as the total edge
//! count. Metrics that are undefined on an input return a [`MetricError`]
//! instead of a non-finite number.

use thiserror::Error;

use crate::community::Community;
use crate::geograph::{GeoGraph, GraphAccess};

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("degree share of the community is 0 or 1")]
    DegenerateDegreeShare,
    #[error("community has a single member")]
    Singleton,
    #[error("community has no frontier")]
    EmptyFrontier,
    #[error("members and frontier share one location")]
    ZeroFrontierDistance,
}

impl MetricError {
    /// Short machine-readable reason.
    pub fn code(&self) -> &'static str {
        match self {
            MetricError::DegenerateDegreeShare => "degenerate_degree_share",
            MetricError::Singleton => "singleton",
            MetricError::EmptyFrontier => "empty_frontier",
            MetricError::ZeroFrontierDistance => "zero_frontier_distance",
        }
    }
}

/// Normalised difference between the internal edge fraction and the
/// degree-based expectation.
pub fn communitude(g: &GeoGraph, c: &Community) -> Result<f64, MetricError> {
    let m = g.edge_count() as f64;
    let degree_sum = (2 * c.internal_edges() + c.boundary_edges()) as f64;
    if m == 0.0 || degree_sum == 0.0 || degree_sum >= 2.0 * m {
        return Err(MetricError::DegenerateDegreeShare);
    }
    let share = degree_sum / (2.0 * m);
    let sq = share * share;
    Ok((c.internal_edges() as f64 / m - sq) / (sq * (1.0 - sq)).sqrt())
}

/// Mean pairwise member distance; the negation of the spatial objective.
pub fn d_avg(c: &Community) -> Result<f64, MetricError> {
    c.mean_distance().ok_or(MetricError::Singleton)
}

/// Mean internal distance over mean member-to-frontier distance.
pub fn d_io<G: GraphAccess>(g: &G, c: &Community) -> Result<f64, MetricError> {
    let inner = d_avg(c)?;
    if c.frontier().is_empty() {
        return Err(MetricError::EmptyFrontier);
    }
    let mut cross = 0.0;
    for &i in c.members() {
        for &j in c.frontier() {
            cross += g.distance(i, j);
        }
    }
    let outer = cross / (c.len() * c.frontier().len()) as f64;
    if outer == 0.0 {
        return Err(MetricError::ZeroFrontierDistance);
    }
    Ok(inner / outer)
}

/// Boundary edges per member.
pub fn expansion(c: &Community) -> f64 {
    c.boundary_edges() as f64 / c.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub communitude: Result<f64, MetricError>,
    pub d_avg: Result<f64, MetricError>,
    pub d_io: Result<f64, MetricError>,
    pub expansion: f64,
}

impl MetricReport {
    pub fn evaluate(g: &GeoGraph, c: &Community) -> Self {
        Self {
            communitude: communitude(g, c),
            d_avg: d_avg(c),
            d_io: d_io(g, c),
            expansion: expansion(c),
        }
    }
}
