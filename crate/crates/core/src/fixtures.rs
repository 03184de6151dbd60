//! The seven-node toy network used throughout the tests.
//!
//! ```text
//!   edges: a-b a-c a-d a-f a-g b-c b-g c-d d-f f-e g-e
//!   a (0, 0)   b (1, 0)   c (1.5, 1.5)   d (0, 1)
//!   e (-1.5, -2.5)   f (-2, 1)   g (1, -2.5)
//! ```
//!
//! Labels `a`..`g` map to ids 0..6. The layout pins down the first two rounds
//! of exact detection from `a`:
//!
//! * `{a,b}` and `{a,d}` both have `m = 1/6`, `s = -1`;
//! * `c`, `f`, `g` are each farther from `a` than the previous one and all
//!   have degree 3, so `{a,c}`, `{a,f}`, `{a,g}` are dominated;
//! * `c` lies on the diagonal, so `{a,b,c}` and `{a,c,d}` tie exactly on both
//!   objectives while `{a,b,d}` trades modularity for compactness;
//! * `b`, `c`, `d` share the lowest inward ratio rank from `{a}`, so pruned
//!   derivation keeps `{a,b}` and `{a,c}`.

use std::path::Path;

use thiserror::Error;

use crate::community::{Community, Modularity};
use crate::dominance::filter_nondominated;
use crate::geograph::{DistanceMetric, GeoGraph, Location};

const NODES: [(&str, f64, f64); 7] = [
    ("a", 0.0, 0.0),
    ("b", 1.0, 0.0),
    ("c", 1.5, 1.5),
    ("d", 0.0, 1.0),
    ("e", -1.5, -2.5),
    ("f", -2.0, 1.0),
    ("g", 1.0, -2.5),
];

const EDGES: [(&str, &str); 11] = [
    ("a", "b"),
    ("a", "c"),
    ("a", "d"),
    ("a", "f"),
    ("a", "g"),
    ("b", "c"),
    ("b", "g"),
    ("c", "d"),
    ("d", "f"),
    ("f", "e"),
    ("g", "e"),
];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("toy fixture violates its construction constraint: {0}")]
    Constraint(String),
    #[error("cannot write fixture files: {0}")]
    Io(#[from] std::io::Error),
}

/// The toy network, unchecked.
pub fn toy_network() -> GeoGraph {
    let index = |l: &str| NODES.iter().position(|(n, _, _)| *n == l).unwrap();
    GeoGraph::from_parts(
        NODES
            .iter()
            .map(|&(l, x, y)| (l.to_string(), Location::new(x, y)))
            .collect(),
        EDGES.iter().map(|&(u, v)| (index(u), index(v))),
        DistanceMetric::Euclidean,
    )
}

/// The toy network after asserting the facts it was built to satisfy.
pub fn build_toy_fixture() -> Result<GeoGraph, FixtureError> {
    let g = toy_network();
    let id = |l: &str| g.node(l).unwrap();
    let ensure = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(FixtureError::Constraint(what.to_string()))
        }
    };
    let grow = |labels: &str| -> Community {
        let mut it = labels.chars().map(|ch| id(&ch.to_string()));
        let mut c = Community::singleton(&g, it.next().unwrap());
        for v in it {
            c = c.expand(&g, v).unwrap();
        }
        c
    };
    let key = |c: &Community| -> String { c.members().iter().map(|&v| g.label(v)).collect() };

    let a = Community::singleton(&g, id("a"));
    ensure(key(&a) == "a" && a.frontier().len() == 5, "N_a = {b,c,d,f,g}")?;
    ensure(
        a.frontier().iter().map(|&v| g.label(v)).collect::<String>() == "bcdfg",
        "N_a = {b,c,d,f,g}",
    )?;

    let ab = grow("ab");
    let ad = grow("ad");
    ensure(ab.modularity() == Modularity::new(1, 6), "M_ab = 1/6")?;
    ensure(ab.spatial() == -1.0, "S_ab = -1")?;
    ensure(ad.objectives() == ab.objectives(), "{a,d} ties {a,b}")?;
    ensure(
        ab.frontier().iter().map(|&v| g.label(v)).collect::<String>() == "cdfg",
        "N_ab = {c,d,f,g}",
    )?;
    let ac = grow("ac");
    ensure(
        ac.modularity() <= ad.modularity() && ac.spatial() < ad.spatial(),
        "S_ac < S_ad with no better M",
    )?;

    let first: Vec<Community> = ["ab", "ad", "ac", "af", "ag"].iter().map(|s| grow(s)).collect();
    let mut pool = vec![a.clone()];
    pool.extend(first.iter().cloned());
    let nd1: Vec<String> = filter_nondominated(pool).iter().map(key).collect();
    ensure(nd1 == ["ab", "ad"], "first-round ND = {ab, ad}")?;

    // built in derivation order: {a,c,d} comes from {a,d}, which keeps its
    // distance sum bit-identical to {a,b,c}
    let second: Vec<Community> = ["abc", "abd", "abf", "abg", "adc", "adf", "adg"]
        .iter()
        .map(|s| grow(s))
        .collect();
    let mut pool = vec![ab.clone(), ad.clone()];
    pool.extend(second);
    let mut nd2: Vec<String> = filter_nondominated(pool).iter().map(key).collect();
    nd2.sort();
    ensure(
        nd2 == ["ab", "abc", "abd", "acd", "ad"],
        &format!("second-round ND = {{ab, ad, abc, abd, acd}}, got {nd2:?}"),
    )?;
    Ok(g)
}

/// Checks the toy network and writes its edge and location files to `dir`.
pub fn write_toy_fixture(dir: impl AsRef<Path>) -> Result<(), FixtureError> {
    let g = build_toy_fixture()?;
    std::fs::create_dir_all(dir.as_ref())?;
    g.write_files(dir)?;
    Ok(())
}
