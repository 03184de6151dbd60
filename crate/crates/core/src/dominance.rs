//! Community dominance and sort-and-sweep nondominated filtration.
//!
//! Candidates are ordered by `m` descending, then `s` descending, then member
//! list ascending. In that order a candidate is dominated by some earlier one
//! iff it is dominated by the nearest earlier candidate still retained, so a
//! single linear sweep after the sort yields the nondominated set.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::Arc;

use crate::community::{Community, Objectives};
use crate::geograph::NodeId;

/// Anything that can take part in a filtration.
pub trait Candidate {
    fn objectives(&self) -> Objectives;
    /// Canonical identity: the sorted member list.
    fn canonical(&self) -> &[NodeId];
}

impl Candidate for Community {
    fn objectives(&self) -> Objectives {
        Community::objectives(self)
    }

    fn canonical(&self) -> &[NodeId] {
        self.members()
    }
}

impl<T: Candidate + ?Sized> Candidate for &T {
    fn objectives(&self) -> Objectives {
        (**self).objectives()
    }

    fn canonical(&self) -> &[NodeId] {
        (**self).canonical()
    }
}

impl<T: Candidate + ?Sized> Candidate for Arc<T> {
    fn objectives(&self) -> Objectives {
        (**self).objectives()
    }

    fn canonical(&self) -> &[NodeId] {
        (**self).canonical()
    }
}

/// `c1` dominates `c2`.
pub fn dominates<A: Candidate, B: Candidate>(c1: &A, c2: &B) -> bool {
    c1.objectives().dominates(&c2.objectives())
}

/// Total order used for every sorted pool: best `m` first.
pub fn dominance_order<A: Candidate, B: Candidate>(a: &A, b: &B) -> Ordering {
    let (oa, ob) = (a.objectives(), b.objectives());
    ob.m.cmp(&oa.m)
        .then_with(|| ob.s.total_cmp(&oa.s))
        .then_with(|| a.canonical().cmp(b.canonical()))
}

/// Returns the nondominated members of `pool` in dominance order.
///
/// Entries sharing a member list are collapsed first; the earliest one in
/// `pool` is kept.
pub fn filter_nondominated<T: Candidate>(pool: Vec<T>) -> Vec<T> {
    let keep: Vec<bool> = {
        let mut seen: HashSet<&[NodeId]> = HashSet::with_capacity(pool.len());
        pool.iter().map(|c| seen.insert(c.canonical())).collect()
    };
    let mut items: Vec<(Objectives, T)> = pool
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then(|| (c.objectives(), c)))
        .collect();
    items.sort_by(|(oa, a), (ob, b)| {
        ob.m.cmp(&oa.m)
            .then_with(|| ob.s.total_cmp(&oa.s))
            .then_with(|| a.canonical().cmp(b.canonical()))
    });

    let mut out: Vec<T> = Vec::with_capacity(items.len());
    let mut last: Option<Objectives> = None;
    for (obj, c) in items {
        if last.is_some_and(|prev| prev.dominates(&obj)) {
            continue;
        }
        last = Some(obj);
        out.push(c);
    }
    out
}
