//! Brute-force reference implementations. Nothing here calls the optimised
//! detection, filtration or metric code; only graph accessors are shared.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use geocomm::{GeoGraph, GraphAccess, Location, NodeId};

pub type Members = BTreeSet<u32>;

/// Internal/boundary edge counts as a plain pair; `out == 0 && in > 0` is infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub inside: u64,
    pub out: u64,
}

impl Ratio {
    /// 0 for a zero ratio (including 0/0), 2 for infinity, 1 otherwise.
    fn class(&self) -> u8 {
        match (self.inside, self.out) {
            (0, _) => 0,
            (_, 0) => 2,
            _ => 1,
        }
    }

    pub fn cmp_value(&self, other: &Ratio) -> Ordering {
        match (self.class(), other.class()) {
            (1, 1) => (self.inside as u128 * other.out as u128)
                .cmp(&(other.inside as u128 * self.out as u128)),
            (a, b) => a.cmp(&b),
        }
    }
}

/// Objective pair plus member set, as the oracle sees a candidate.
#[derive(Clone, Debug)]
pub struct Entry {
    pub members: Vec<u32>,
    pub m: Ratio,
    pub s: f64,
}

fn s_cmp(a: f64, b: f64, tol: f64) -> Ordering {
    if a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0) {
        Ordering::Equal
    } else {
        a.partial_cmp(&b).unwrap()
    }
}

/// `a` dominates `b`, with spatial values within `tol` (relative) treated as equal.
pub fn oracle_dominates(a: &Entry, b: &Entry, tol: f64) -> bool {
    let m = a.m.cmp_value(&b.m);
    let s = s_cmp(a.s, b.s, tol);
    (m != Ordering::Less && s == Ordering::Greater) || (s != Ordering::Less && m == Ordering::Greater)
}

/// All-pairs nondominated subset; repeated member sets count once (first wins).
pub fn oracle_nondominated(pool: &[Entry], tol: f64) -> Vec<Entry> {
    let mut seen = HashSet::new();
    let unique: Vec<&Entry> = pool.iter().filter(|e| seen.insert(e.members.clone())).collect();
    unique
        .iter()
        .filter(|e| !unique.iter().any(|o| oracle_dominates(o, e, tol)))
        .map(|e| (*e).clone())
        .collect()
}

/// Sort by M desc, S desc, members ascending.
pub fn oracle_sort(entries: &mut [Entry], tol: f64) {
    entries.sort_by(|a, b| {
        b.m.cmp_value(&a.m)
            .then(s_cmp(b.s, a.s, tol))
            .then(a.members.cmp(&b.members))
    });
}

pub fn euclid(a: Location, b: Location) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// `(e_in, e_out, dist_sum)` counted from scratch.
pub fn oracle_recount(g: &GeoGraph, members: &Members) -> (u64, u64, f64) {
    let mut inside2 = 0u64;
    let mut out = 0u64;
    for &u in members {
        for w in g.neighbors(NodeId(u)) {
            if members.contains(&w.0) {
                inside2 += 1;
            } else {
                out += 1;
            }
        }
    }
    let ids: Vec<u32> = members.iter().copied().collect();
    let mut dist = 0.0;
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            dist += g.distance(NodeId(ids[i]), NodeId(ids[j]));
        }
    }
    (inside2 / 2, out, dist)
}

pub fn oracle_frontier(g: &GeoGraph, members: &Members) -> Members {
    members
        .iter()
        .flat_map(|&u| g.neighbors(NodeId(u)).iter().map(|w| w.0))
        .filter(|w| !members.contains(w))
        .collect()
}

pub fn oracle_entry(g: &GeoGraph, members: &Members) -> Entry {
    let (inside, out, dist) = oracle_recount(g, members);
    let n = members.len() as f64;
    let s = if members.len() < 2 { f64::NEG_INFINITY } else { -dist / (n * (n - 1.0) / 2.0) };
    Entry {
        members: members.iter().copied().collect(),
        m: Ratio { inside, out },
        s,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleMetrics {
    pub communitude: Option<f64>,
    pub d_avg: Option<f64>,
    pub d_io: Option<f64>,
    pub expansion: f64,
}

/// Metrics straight from their definitions; `None` where undefined.
pub fn oracle_metrics(g: &GeoGraph, members: &Members) -> OracleMetrics {
    let (inside, out, _) = oracle_recount(g, members);
    let m = g.edge_count() as f64;
    let deg: f64 = members.iter().map(|&u| g.neighbors(NodeId(u)).len() as f64).sum();
    let share = deg / (2.0 * m);
    let communitude = (m > 0.0 && share > 0.0 && share < 1.0).then(|| {
        (inside as f64 / m - share * share) / (share * share * (1.0 - share * share)).sqrt()
    });
    let ids: Vec<u32> = members.iter().copied().collect();
    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            pair_sum += euclid(g.location(NodeId(a)), g.location(NodeId(b)));
            pairs += 1;
        }
    }
    let d_avg = (pairs > 0).then(|| pair_sum / pairs as f64);
    let frontier = oracle_frontier(g, members);
    let d_io = d_avg.and_then(|inner| {
        if frontier.is_empty() {
            return None;
        }
        let mut cross = 0.0;
        for &a in &ids {
            for &b in &frontier {
                cross += euclid(g.location(NodeId(a)), g.location(NodeId(b)));
            }
        }
        let outer = cross / (ids.len() * frontier.len()) as f64;
        (outer > 0.0).then(|| inner / outer)
    });
    OracleMetrics {
        communitude,
        d_avg,
        d_io,
        expansion: out as f64 / members.len() as f64,
    }
}

/// One round of the reference detector.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRound {
    pub derived: BTreeSet<Vec<u32>>,
    pub nd: BTreeSet<Vec<u32>>,
    pub hnd: BTreeSet<Vec<u32>>,
    pub nde: BTreeSet<Vec<u32>>,
}

pub struct OracleRun {
    pub rounds: Vec<OracleRound>,
    /// Final pool in selection order.
    pub final_nd: Vec<Vec<u32>>,
    pub selected: Vec<u32>,
}

/// Exact detection from `v` with every set recomputed from scratch each round.
pub fn oracle_sldr(g: &GeoGraph, v: u32, tol: f64) -> OracleRun {
    let seed: Members = [v].into_iter().collect();
    let mut nd: Vec<Members> = vec![seed.clone()];
    let mut hnd: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut nde: Vec<Members> = vec![seed];
    let mut rounds = Vec::new();
    while !nde.is_empty() {
        let mut derived: BTreeSet<Members> = BTreeSet::new();
        for c in &nde {
            for u in oracle_frontier(g, c) {
                let mut child = c.clone();
                child.insert(u);
                derived.insert(child);
            }
        }
        let mut pool: Vec<Entry> = nd.iter().map(|c| oracle_entry(g, c)).collect();
        pool.extend(derived.iter().map(|c| oracle_entry(g, c)));
        let kept = oracle_nondominated(&pool, tol);
        let nd_keys: BTreeSet<Vec<u32>> = kept.iter().map(|e| e.members.clone()).collect();
        let nde_keys: BTreeSet<Vec<u32>> = nde.iter().map(|c| c.iter().copied().collect()).collect();
        let new_hnd: BTreeSet<Vec<u32>> = nd_keys
            .iter()
            .filter(|k| hnd.contains(*k) || nde_keys.contains(*k))
            .cloned()
            .collect();
        let new_nde: BTreeSet<Vec<u32>> = nd_keys.difference(&new_hnd).cloned().collect();
        rounds.push(OracleRound {
            derived: derived.iter().map(|c| c.iter().copied().collect()).collect(),
            nd: nd_keys.clone(),
            hnd: new_hnd.clone(),
            nde: new_nde.clone(),
        });
        nd = nd_keys.iter().map(|k| k.iter().copied().collect()).collect();
        hnd = new_hnd;
        nde = new_nde.iter().map(|k| k.iter().copied().collect()).collect();
    }
    let mut entries: Vec<Entry> = nd.iter().map(|c| oracle_entry(g, c)).collect();
    oracle_sort(&mut entries, tol);
    let final_nd: Vec<Vec<u32>> = entries.iter().map(|e| e.members.clone()).collect();
    let selected = final_nd[(final_nd.len() + 1) / 2 - 1].clone();
    OracleRun { rounds, final_nd, selected }
}

/// Reference greedy: add the frontier node giving the largest ratio while it
/// strictly improves; smallest id on ties.
pub fn oracle_mgreedy(g: &GeoGraph, v: u32) -> Vec<u32> {
    let mut c: Members = [v].into_iter().collect();
    loop {
        let (i, o, _) = oracle_recount(g, &c);
        let current = Ratio { inside: i, out: o };
        let mut best: Option<(Ratio, u32)> = None;
        for u in oracle_frontier(g, &c) {
            let mut next = c.clone();
            next.insert(u);
            let (i, o, _) = oracle_recount(g, &next);
            let r = Ratio { inside: i, out: o };
            if best.is_none_or(|(b, _)| r.cmp_value(&b) == Ordering::Greater) {
                best = Some((r, u));
            }
        }
        match best {
            Some((r, u)) if r.cmp_value(&current) == Ordering::Greater => {
                c.insert(u);
            }
            _ => return c.into_iter().collect(),
        }
    }
}

pub fn labels(g: &GeoGraph, members: &[u32]) -> String {
    members.iter().map(|&u| g.label(NodeId(u)).to_string()).collect()
}

pub fn label_set(g: &GeoGraph, sets: &BTreeSet<Vec<u32>>) -> BTreeSet<String> {
    sets.iter().map(|s| labels(g, s)).collect()
}

/// Small connected-ish random graph with float coordinates in the unit square.
pub fn random_graph(seed: u64, n: usize, m: usize) -> GeoGraph {
    geocomm::generate(&geocomm::SynthConfig::new(n, m, seed)).unwrap()
}

/// Union of members and frontiers over every community the run could have
/// expanded: the seed and each round's `nde` snapshot.
pub fn expanded_closure(g: &GeoGraph, r: &geocomm::DetectionResult) -> BTreeSet<u32> {
    let mut expanded: Vec<Members> = vec![[r.query.0].into_iter().collect()];
    for round in &r.trace {
        for c in &round.nde {
            expanded.push(c.iter().map(|v| v.0).collect());
        }
    }
    let mut out = BTreeSet::new();
    for c in &expanded {
        out.extend(c.iter().copied());
        out.extend(oracle_frontier(g, c));
    }
    out
}

/// Members of the final pool, their frontier and the frontier of that.
pub fn final_pool_closure(g: &GeoGraph, r: &geocomm::DetectionResult) -> BTreeSet<u32> {
    let mut base: Members = r.community.members().iter().map(|v| v.0).collect();
    if let Some(last) = r.trace.last() {
        for c in &last.nd {
            base.extend(c.iter().map(|v| v.0));
        }
    }
    let ring1 = oracle_frontier(g, &base);
    let inner: Members = base.union(&ring1).copied().collect();
    let ring2 = oracle_frontier(g, &inner);
    inner.union(&ring2).copied().collect()
}

/// Panics unless every touched node lies in the expanded closure.
pub fn assert_local(g: &GeoGraph, r: &geocomm::DetectionResult) {
    let touched = r.touched.as_ref().expect("run with tracing enabled");
    assert_eq!(touched.len(), r.accessed_nodes);
    let allowed = if r.variant == geocomm::Variant::MGreedy {
        let c: Members = r.community.members().iter().map(|v| v.0).collect();
        let mut a = oracle_frontier(g, &c);
        a.extend(c);
        a
    } else {
        expanded_closure(g, r)
    };
    for v in touched {
        assert!(allowed.contains(&v.0), "node {} read outside the expanded closure", v.0);
    }
}
