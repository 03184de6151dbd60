//! Dominance-guided local community detection.
//!
//! The main loop keeps three pools: `nd` (nondominated communities), `hnd`
//! (the part of `nd` already expanded) and `nde` (the part still to expand).
//! Each round derives every one-node expansion of the `nde` communities,
//! filters `derived ∪ nd` down to its nondominated set and then recomputes
//! `hnd` and `nde`. The loop ends when `nde` is empty or the time budget is
//! spent; either way the community in the middle of `nd` is returned.
//!
//! The approximate variant expands each community only through the top
//! fraction of its frontier ranked by inward ratio (edges into the community
//! over edges leaving it).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::baseline;
use crate::community::{count_common, Community};
use crate::dominance::filter_nondominated;
use crate::geograph::{GeoGraph, GraphAccess, GraphError, NodeId, TrackedGraph};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot select from an empty pool")]
    EmptyPool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("fraction must lie in (0, 1], got {0}")]
    FractionRange(String),
    #[error("cannot parse fraction `{0}`")]
    FractionSyntax(String),
    #[error("exact variant expands the whole frontier; prune fraction must be 1, got {0}")]
    ExactNeedsFullFrontier(Fraction),
    #[error("unknown algorithm `{0}` (expected sldr, appsldr or mgreedy)")]
    UnknownVariant(String),
    #[error("unknown prune source `{0}` (expected own or parent)")]
    UnknownPruneSource(String),
}

/// A rational number in `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    num: u32,
    den: u32,
}

impl Fraction {
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };
    pub const THIRD: Fraction = Fraction { num: 1, den: 3 };

    pub fn new(num: u32, den: u32) -> Result<Self, ConfigError> {
        if num == 0 || den == 0 || num > den {
            return Err(ConfigError::FractionRange(format!("{num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Fraction { num: num / g, den: den / g })
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    /// `⌈n · self⌉`
    pub fn ceil_of(&self, n: usize) -> usize {
        (n as u64 * self.num as u64).div_ceil(self.den as u64) as usize
    }

    pub fn numer(&self) -> u32 {
        self.num
    }

    pub fn denom(&self) -> u32 {
        self.den
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = ConfigError;

    /// Accepts `p/q` or a plain decimal such as `0.25`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || ConfigError::FractionSyntax(s.to_string());
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse::<u32>().map_err(|_| syntax())?;
            let q = q.trim().parse::<u32>().map_err(|_| syntax())?;
            return Fraction::new(p, q);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty()
            || frac.len() > 9
            || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        {
            return Err(syntax());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| syntax())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| syntax())? };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(syntax)?;
        if num == 0 || num > den {
            return Err(ConfigError::FractionRange(s.to_string()));
        }
        Fraction::new(num as u32, den as u32)
    }
}

/// Which frontier size the pruned expansion count is taken from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PruneSource {
    /// `⌈|N_C| · f⌉` of the community being expanded.
    #[default]
    Own,
    /// `⌈|N_P| · f⌉` of the community it was derived from (own size for the seed).
    Parent,
}

impl FromStr for PruneSource {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "own" => Ok(PruneSource::Own),
            "parent" => Ok(PruneSource::Parent),
            _ => Err(ConfigError::UnknownPruneSource(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Exact derivation over the full frontier.
    Sldr,
    /// Derivation over the inward-ratio-pruned frontier.
    AppSldr,
    /// Structural-only greedy baseline.
    MGreedy,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Sldr => "sldr",
            Variant::AppSldr => "appsldr",
            Variant::MGreedy => "mgreedy",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sldr" => Ok(Variant::Sldr),
            "appsldr" => Ok(Variant::AppSldr),
            "mgreedy" | "m" => Ok(Variant::MGreedy),
            _ => Err(ConfigError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub enum TraceLevel {
    #[default]
    Off,
    /// Record `nd`, `hnd`, `nde` after every round and the set of touched nodes.
    Pools,
    /// Also record every derived community.
    Full,
}

#[derive(Clone, Debug)]
pub struct DetectionConfig {
    pub variant: Variant,
    pub prune_fraction: Fraction,
    pub prune_source: PruneSource,
    pub budget: Duration,
    pub max_community_size: Option<usize>,
    /// Unused by detection, which is deterministic; kept for run records.
    pub seed: u64,
    pub trace: TraceLevel,
}

impl DetectionConfig {
    pub const DEFAULT_BUDGET: Duration = Duration::from_secs(7200);

    pub fn new(variant: Variant) -> Self {
        let prune_fraction = match variant {
            Variant::AppSldr => Fraction::THIRD,
            _ => Fraction::ONE,
        };
        Self {
            variant,
            prune_fraction,
            prune_source: PruneSource::Own,
            budget: Self::DEFAULT_BUDGET,
            max_community_size: None,
            seed: 0,
            trace: TraceLevel::Off,
        }
    }

    pub fn sldr() -> Self {
        Self::new(Variant::Sldr)
    }

    pub fn app_sldr() -> Self {
        Self::new(Variant::AppSldr)
    }

    pub fn mgreedy() -> Self {
        Self::new(Variant::MGreedy)
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_fraction(mut self, f: Fraction) -> Self {
        self.prune_fraction = f;
        self
    }

    pub fn with_trace(mut self, level: TraceLevel) -> Self {
        self.trace = level;
        self
    }

    pub fn with_max_size(mut self, n: usize) -> Self {
        self.max_community_size = Some(n);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.variant == Variant::Sldr && !self.prune_fraction.is_one() {
            return Err(ConfigError::ExactNeedsFullFrontier(self.prune_fraction));
        }
        Ok(())
    }

    fn expansion(&self) -> Expansion {
        Expansion {
            fraction: self.prune_fraction,
            source: self.prune_source,
            max_size: self.max_community_size,
        }
    }

    pub(crate) fn deadline(&self, start: Instant) -> Option<Instant> {
        start.checked_add(self.budget)
    }
}

/// How each parent is expanded during derivation.
#[derive(Clone, Copy, Debug)]
pub struct Expansion {
    pub fraction: Fraction,
    pub source: PruneSource,
    pub max_size: Option<usize>,
}

impl Expansion {
    pub fn full() -> Self {
        Self {
            fraction: Fraction::ONE,
            source: PruneSource::Own,
            max_size: None,
        }
    }

    pub fn pruned(fraction: Fraction) -> Self {
        Self {
            fraction,
            ..Self::full()
        }
    }
}

/// Insertion-ordered set of communities keyed by member set; the first
/// insert of a member set wins.
#[derive(Clone, Debug, Default)]
pub struct CommunityPool {
    items: Vec<Arc<Community>>,
    index: HashSet<Arc<Community>>,
}

impl CommunityPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: Arc<Community>) -> bool {
        if self.index.contains(&c) {
            return false;
        }
        self.index.insert(Arc::clone(&c));
        self.items.push(c);
        true
    }

    pub fn contains(&self, c: &Community) -> bool {
        self.index.contains(c)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Arc<Community>> {
        self.items.iter()
    }

    pub fn as_slice(&self) -> &[Arc<Community>] {
        &self.items
    }

    pub fn into_vec(self) -> Vec<Arc<Community>> {
        self.items
    }
}

impl FromIterator<Arc<Community>> for CommunityPool {
    fn from_iter<I: IntoIterator<Item = Arc<Community>>>(iter: I) -> Self {
        let mut pool = CommunityPool::new();
        for c in iter {
            pool.insert(c);
        }
        pool
    }
}

/// Frontier nodes of `c` to expand through, in expansion order.
///
/// With a fraction of one this is the whole frontier in id order. Otherwise
/// nodes are ranked by inward ratio `|N_u ∩ C| / (deg(u) − |N_u ∩ C|)`
/// (zero outward edges rank highest), ties by ascending id, and the first
/// `⌈n · fraction⌉` are kept, `n` being the frontier size picked by `source`.
pub fn expansion_set<G: GraphAccess>(
    g: &G,
    c: &Community,
    fraction: Fraction,
    source: PruneSource,
) -> Vec<NodeId> {
    let frontier = c.frontier();
    if fraction.is_one() {
        return frontier.to_vec();
    }
    let base = match source {
        PruneSource::Own => frontier.len(),
        PruneSource::Parent => c.parent_frontier_len().unwrap_or(frontier.len()),
    };
    let keep = fraction.ceil_of(base).min(frontier.len());
    let mut ranked: Vec<(u64, u64, NodeId)> = frontier
        .iter()
        .map(|&u| {
            let nbrs = g.neighbors(u);
            let inward = count_common(nbrs, c.members()) as u64;
            (inward, nbrs.len() as u64 - inward, u)
        })
        .collect();
    ranked.sort_by(|&(ia, oa, ua), &(ib, ob, ub)| {
        // ia/oa > ib/ob  <=>  ia·ob > ib·oa; also right when either out-degree is 0
        (ib as u128 * oa as u128)
            .cmp(&(ia as u128 * ob as u128))
            .then(ua.cmp(&ub))
    });
    ranked.truncate(keep);
    ranked.into_iter().map(|(_, _, u)| u).collect()
}

/// Every one-node expansion of the communities in `nde`, deduplicated by
/// member set (first derivation wins).
pub fn derive<G: GraphAccess>(g: &G, nde: &[Arc<Community>], exp: &Expansion) -> CommunityPool {
    derive_until(g, nde, exp, None).expect("derivation without a deadline cannot time out")
}

/// As [`derive`], but gives up once `deadline` passes, returning how many
/// communities had been derived by then.
fn derive_until<G: GraphAccess>(
    g: &G,
    nde: &[Arc<Community>],
    exp: &Expansion,
    deadline: Option<Instant>,
) -> Result<CommunityPool, usize> {
    let expired = || deadline.is_some_and(|d| Instant::now() >= d);
    let mut out = CommunityPool::new();
    for parent in nde {
        if exp.max_size.is_some_and(|max| parent.len() >= max) {
            continue;
        }
        if expired() {
            return Err(out.len());
        }
        for u in expansion_set(g, parent, exp.fraction, exp.source) {
            let child = parent
                .expand(g, u)
                .expect("expansion set is drawn from the frontier");
            out.insert(Arc::new(child));
            if expired() {
                return Err(out.len());
            }
        }
    }
    Ok(out)
}

/// The `⌈n/2⌉`-th entry (1-based) of a pool sorted in dominance order.
pub fn select_final<T>(nd: &[T]) -> Result<&T, EngineError> {
    if nd.is_empty() {
        return Err(EngineError::EmptyPool);
    }
    Ok(&nd[nd.len().div_ceil(2) - 1])
}

/// Pool snapshot after one round; each community is its sorted member list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IterationTrace {
    pub derived_count: usize,
    /// Filled only at [`TraceLevel::Full`].
    pub derived: Vec<Vec<NodeId>>,
    pub nd: Vec<Vec<NodeId>>,
    pub hnd: Vec<Vec<NodeId>>,
    pub nde: Vec<Vec<NodeId>>,
}

#[derive(Clone, Debug)]
pub struct DetectionResult {
    pub query: NodeId,
    pub variant: Variant,
    pub community: Community,
    pub iterations: usize,
    /// Communities derived, including any round cut short by the budget.
    pub derived_total: usize,
    pub runtime: Duration,
    pub timed_out: bool,
    pub nd_final_size: usize,
    pub accessed_nodes: usize,
    /// Sorted touched nodes; recorded when tracing.
    pub touched: Option<Vec<NodeId>>,
    pub trace: Vec<IterationTrace>,
}

fn snapshot<'a>(pool: impl IntoIterator<Item = &'a Arc<Community>>) -> Vec<Vec<NodeId>> {
    pool.into_iter().map(|c| c.members().to_vec()).collect()
}

/// Runs the configured algorithm from query node `v`.
pub fn detect(g: &GeoGraph, v: NodeId, cfg: &DetectionConfig) -> Result<DetectionResult, EngineError> {
    cfg.validate()?;
    g.check(v)?;
    match cfg.variant {
        Variant::MGreedy => baseline::detect_mgreedy(g, v, cfg),
        Variant::Sldr | Variant::AppSldr => Ok(run_dominance(g, v, cfg)),
    }
}

fn run_dominance(g: &GeoGraph, v: NodeId, cfg: &DetectionConfig) -> DetectionResult {
    let start = Instant::now();
    let deadline = cfg.deadline(start);
    let view = TrackedGraph::new(g);
    let exp = cfg.expansion();

    let seed = Arc::new(Community::singleton(&view, v));
    let mut nd: Vec<Arc<Community>> = vec![Arc::clone(&seed)];
    let mut hnd: HashSet<Arc<Community>> = HashSet::new();
    let mut nde: Vec<Arc<Community>> = vec![seed];

    let mut iterations = 0;
    let mut derived_total = 0;
    let mut timed_out = false;
    let mut trace = Vec::new();

    while !nde.is_empty() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out = true;
            break;
        }
        let derived = match derive_until(&view, &nde, &exp, deadline) {
            Ok(pool) => pool,
            Err(partial) => {
                // the partial round is dropped but its work still counts
                derived_total += partial;
                timed_out = true;
                break;
            }
        };
        iterations += 1;
        derived_total += derived.len();
        let derived_snapshot = (cfg.trace >= TraceLevel::Full).then(|| snapshot(derived.iter()));
        let derived_count = derived.len();

        let mut union = std::mem::take(&mut nd);
        union.extend(derived.into_vec());
        nd = filter_nondominated(union);

        let expanded: HashSet<&Community> = nde.iter().map(|c| c.as_ref()).collect();
        let next_hnd: HashSet<Arc<Community>> = nd
            .iter()
            .filter(|c| hnd.contains(c.as_ref()) || expanded.contains(c.as_ref()))
            .cloned()
            .collect();
        let next_nde: Vec<Arc<Community>> = nd
            .iter()
            .filter(|c| !next_hnd.contains(c.as_ref()))
            .cloned()
            .collect();
        drop(expanded);
        hnd = next_hnd;
        nde = next_nde;

        if cfg.trace >= TraceLevel::Pools {
            trace.push(IterationTrace {
                derived_count,
                derived: derived_snapshot.unwrap_or_default(),
                nd: snapshot(&nd),
                hnd: snapshot(nd.iter().filter(|c| hnd.contains(c.as_ref()))),
                nde: snapshot(&nde),
            });
        }
    }

    let community = select_final(&nd)
        .expect("nd always holds at least one community")
        .as_ref()
        .clone();
    debug_assert!(community.contains(v));
    DetectionResult {
        query: v,
        variant: cfg.variant,
        community,
        iterations,
        derived_total,
        runtime: start.elapsed(),
        timed_out,
        nd_final_size: nd.len(),
        accessed_nodes: view.log().len(),
        touched: (cfg.trace >= TraceLevel::Pools).then(|| view.log().touched()),
        trace,
    }
}
