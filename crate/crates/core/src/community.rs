//! Community state with incremental objective maintenance.
//!
//! A [`Community`] caches its internal edge count, boundary edge count, the sum
//! of pairwise member distances and its frontier (neighbours outside the
//! community). Growing it by one frontier node costs `O(|C| + deg(u))`.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::geograph::{GraphAccess, GraphError, NodeId};

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("node {0} is not on the community frontier")]
    NotInFrontier(NodeId),
    #[error("community has no members")]
    Empty,
    #[error("members do not induce a connected subgraph")]
    Disconnected,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Local modularity `e_in / e_out`, kept as an exact integer pair.
///
/// `e_out = 0` with `e_in > 0` is `+inf`; `e_in = 0` is zero whatever `e_out` is.
#[derive(Clone, Copy, Debug)]
pub struct Modularity {
    pub internal: u64,
    pub boundary: u64,
}

impl Modularity {
    pub const ZERO: Modularity = Modularity { internal: 0, boundary: 0 };

    pub fn new(internal: u64, boundary: u64) -> Self {
        Self { internal, boundary }
    }

    pub fn is_infinite(&self) -> bool {
        self.internal > 0 && self.boundary == 0
    }

    pub fn value(&self) -> f64 {
        if self.internal == 0 {
            0.0
        } else if self.boundary == 0 {
            f64::INFINITY
        } else {
            self.internal as f64 / self.boundary as f64
        }
    }
}

impl PartialEq for Modularity {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Modularity {}

impl PartialOrd for Modularity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Modularity {
    fn cmp(&self, other: &Self) -> Ordering {
        // 0 = zero, 1 = finite positive, 2 = infinite
        fn class(m: &Modularity) -> u8 {
            match (m.internal, m.boundary) {
                (0, _) => 0,
                (_, 0) => 2,
                _ => 1,
            }
        }
        match class(self).cmp(&class(other)) {
            Ordering::Equal if class(self) == 1 => {
                let lhs = self.internal as u128 * other.boundary as u128;
                let rhs = other.internal as u128 * self.boundary as u128;
                lhs.cmp(&rhs)
            }
            ord => ord,
        }
    }
}

impl fmt::Display for Modularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.internal, self.boundary)
    }
}

/// The two maximised objectives: structural `m` and spatial `s`.
///
/// `s` is the negated mean pairwise member distance, `-inf` for a singleton.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objectives {
    pub m: Modularity,
    pub s: f64,
}

impl Objectives {
    /// `self` dominates `other`: no worse on both objectives, strictly better on one.
    pub fn dominates(&self, other: &Objectives) -> bool {
        let m = self.m.cmp(&other.m);
        let s = self.s.total_cmp(&other.s);
        (m != Ordering::Less && s == Ordering::Greater)
            || (s != Ordering::Less && m == Ordering::Greater)
    }
}

/// Order-independent 64-bit digest of a member set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CommunityKey(pub u64);

impl CommunityKey {
    fn of(members: &[NodeId]) -> Self {
        members
            .iter()
            .fold(CommunityKey(0), |k, &v| k.with(v))
    }

    fn with(self, v: NodeId) -> Self {
        CommunityKey(self.0.wrapping_add(mix(v.0 as u64)))
    }
}

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A connected node set grown from a query node.
///
/// Equality and hashing use the member set only.
#[derive(Clone, Debug)]
pub struct Community {
    members: Vec<NodeId>,
    frontier: Vec<NodeId>,
    e_in: u64,
    e_out: u64,
    dist_sum: f64,
    key: CommunityKey,
    parent_frontier_len: Option<usize>,
}

impl Community {
    pub fn singleton<G: GraphAccess>(g: &G, v: NodeId) -> Community {
        let frontier = g.neighbors(v).to_vec();
        Community {
            e_in: 0,
            e_out: frontier.len() as u64,
            members: vec![v],
            frontier,
            dist_sum: 0.0,
            key: CommunityKey::of(&[v]),
            parent_frontier_len: None,
        }
    }

    /// `self ∪ {u}` for a frontier node `u`. `self` is left untouched.
    pub fn expand<G: GraphAccess>(&self, g: &G, u: NodeId) -> Result<Community, CommunityError> {
        if self.frontier.binary_search(&u).is_err() {
            return Err(CommunityError::NotInFrontier(u));
        }
        let nbrs = g.neighbors(u);
        let k = count_common(nbrs, &self.members) as u64;
        let deg = nbrs.len() as u64;

        let mut added = 0.0;
        for &v in &self.members {
            added += g.distance(u, v);
        }

        let pos = self.members.binary_search(&u).unwrap_err();
        let mut members = Vec::with_capacity(self.members.len() + 1);
        members.extend_from_slice(&self.members[..pos]);
        members.push(u);
        members.extend_from_slice(&self.members[pos..]);

        let frontier = merge_frontier(&self.frontier, nbrs, u, &members);

        Ok(Community {
            e_in: self.e_in + k,
            e_out: self.e_out - k + (deg - k),
            dist_sum: self.dist_sum + added,
            key: self.key.with(u),
            parent_frontier_len: Some(self.frontier.len()),
            members,
            frontier,
        })
    }

    /// Builds a community from an arbitrary connected member set, computing
    /// every cached field from scratch. Members are summed pairwise in
    /// ascending id order.
    pub fn from_members<G: GraphAccess>(
        g: &G,
        members: &[NodeId],
    ) -> Result<Community, CommunityError> {
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(CommunityError::Empty);
        }
        let inside: HashSet<NodeId> = members.iter().copied().collect();
        let mut e_in2 = 0u64;
        let mut deg_sum = 0u64;
        let mut frontier = HashSet::new();
        for &v in &members {
            for &w in g.neighbors(v) {
                deg_sum += 1;
                if inside.contains(&w) {
                    e_in2 += 1;
                } else {
                    frontier.insert(w);
                }
            }
        }
        if !is_connected(g, &members, &inside) {
            return Err(CommunityError::Disconnected);
        }
        let mut dist_sum = 0.0;
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                dist_sum += g.distance(a, b);
            }
        }
        let mut frontier: Vec<NodeId> = frontier.into_iter().collect();
        frontier.sort_unstable();
        Ok(Community {
            e_in: e_in2 / 2,
            e_out: deg_sum - e_in2,
            dist_sum,
            key: CommunityKey::of(&members),
            parent_frontier_len: None,
            members,
            frontier,
        })
    }

    /// Sorted member ids.
    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    /// Sorted frontier ids.
    pub fn frontier(&self) -> &[NodeId] {
        &self.frontier
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn internal_edges(&self) -> u64 {
        self.e_in
    }

    pub fn boundary_edges(&self) -> u64 {
        self.e_out
    }

    pub fn dist_sum(&self) -> f64 {
        self.dist_sum
    }

    pub fn key(&self) -> CommunityKey {
        self.key
    }

    /// Frontier size of the community this one was derived from.
    pub fn parent_frontier_len(&self) -> Option<usize> {
        self.parent_frontier_len
    }

    pub fn modularity(&self) -> Modularity {
        Modularity::new(self.e_in, self.e_out)
    }

    /// Mean pairwise member distance, `None` for a singleton.
    pub fn mean_distance(&self) -> Option<f64> {
        let n = self.members.len();
        if n < 2 {
            return None;
        }
        let pairs = (n * (n - 1) / 2) as f64;
        Some(self.dist_sum / pairs)
    }

    pub fn spatial(&self) -> f64 {
        self.mean_distance().map_or(f64::NEG_INFINITY, |d| -d)
    }

    pub fn objectives(&self) -> Objectives {
        Objectives {
            m: self.modularity(),
            s: self.spatial(),
        }
    }
}

impl PartialEq for Community {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.members == other.members
    }
}

impl Eq for Community {}

impl Hash for Community {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

pub(crate) fn count_common(a: &[NodeId], b: &[NodeId]) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.len() * 8 < large.len() {
        return small.iter().filter(|v| large.binary_search(v).is_ok()).count();
    }
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < small.len() && j < large.len() {
        match small[i].cmp(&large[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `(frontier ∪ nbrs) \ members`, where `members` already contains `u`.
fn merge_frontier(frontier: &[NodeId], nbrs: &[NodeId], u: NodeId, members: &[NodeId]) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(frontier.len() + nbrs.len());
    let (mut i, mut j) = (0, 0);
    while i < frontier.len() || j < nbrs.len() {
        let next = match (frontier.get(i), nbrs.get(j)) {
            (Some(&a), Some(&b)) if a == b => {
                i += 1;
                j += 1;
                a
            }
            (Some(&a), Some(&b)) if a < b => {
                i += 1;
                a
            }
            (Some(_), Some(&b)) | (None, Some(&b)) => {
                j += 1;
                if members.binary_search(&b).is_ok() {
                    continue;
                }
                b
            }
            (Some(&a), None) => {
                i += 1;
                a
            }
            (None, None) => unreachable!(),
        };
        if next != u {
            out.push(next);
        }
    }
    out
}

fn is_connected<G: GraphAccess>(g: &G, members: &[NodeId], inside: &HashSet<NodeId>) -> bool {
    let mut seen = HashSet::with_capacity(members.len());
    let mut stack = vec![members[0]];
    seen.insert(members[0]);
    while let Some(v) = stack.pop() {
        for &w in g.neighbors(v) {
            if inside.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == members.len()
}
