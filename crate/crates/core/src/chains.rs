//! Chain discovery on top of a [`ProfileSet`].
//!
//! Every chain is a segment of a backward chain (the path obtained by
//! repeatedly following left nearest neighbors). The three methods differ
//! only in where they cut that path:
//!
//! * **TSC17** keeps a link `i -> LNN(i)` only when `RNN(LNN(i)) = i`.
//! * **TSC20** keeps growing while the direction angle, measured at the
//!   chain's latest node, stays under a threshold.
//! * **TSC22** starts from a *critical* node (one that belongs to the INNS
//!   of its own left neighbor) and keeps growing while the most recent
//!   critical node seen so far stays in the INNS of the next node.
//!
//! Growth runs backward in time, but [`Chain::nodes`] is always stored in
//! increasing time order.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::ProfileSet;
use crate::series::{DistanceContext, TimeSeries};

/// Default TSC20 direction-angle threshold in degrees.
pub const DEFAULT_ANGLE: f64 = 40.0;
pub const DEFAULT_MAX_CANDIDATES: usize = 100_000;
const ANGLE_NORM_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tsc17,
    Tsc20,
    Tsc22,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Tsc17, Method::Tsc20, Method::Tsc22];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Tsc17 => "tsc17",
            Method::Tsc20 => "tsc20",
            Method::Tsc22 => "tsc22",
        }
    }

    pub fn tag(self) -> ChainTag {
        match self {
            Method::Tsc17 => ChainTag::Tsc17,
            Method::Tsc20 => ChainTag::Tsc20,
            Method::Tsc22 => ChainTag::Tsc22,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsc17" => Ok(Method::Tsc17),
            "tsc20" => Ok(Method::Tsc20),
            "tsc22" => Ok(Method::Tsc22),
            other => Err(Error::InvalidParam(format!("unknown method `{other}`"))),
        }
    }
}

/// How a chain was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainTag {
    Tsc17,
    Tsc20,
    Tsc22,
    Backward,
    Forward,
    Forced,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chain {
    pub tag: ChainTag,
    /// Window starts in increasing time order.
    pub nodes: Vec<usize>,
}

impl Chain {
    pub fn new(tag: ChainTag, nodes: Vec<usize>) -> Self {
        Self { tag, nodes }
    }

    /// Builds a chain from nodes listed latest-first, as growth produces them.
    fn from_backward(tag: ChainTag, mut nodes: Vec<usize>) -> Self {
        nodes.reverse();
        Self { tag, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The latest node in time (where backward growth starts).
    pub fn latest(&self) -> Option<usize> {
        self.nodes.last().copied()
    }

    pub fn earliest(&self) -> Option<usize> {
        self.nodes.first().copied()
    }
}

/// Critical nodes: windows `i` with `i ∈ INNS(LNN(i))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalSet {
    members: Vec<bool>,
}

impl CriticalSet {
    pub fn contains(&self, i: usize) -> bool {
        self.members.get(i).copied().unwrap_or(false)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_bitmap(&self) -> &[bool] {
        &self.members
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryParams {
    /// TSC20 direction-angle threshold in degrees, in (0, 180].
    pub angle: f64,
    /// Candidate cap; the longest candidates are retained.
    pub max_candidates: usize,
}

impl Default for DiscoveryParams {
    fn default() -> Self {
        Self { angle: DEFAULT_ANGLE, max_candidates: DEFAULT_MAX_CANDIDATES }
    }
}

impl DiscoveryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.angle > 0.0 && self.angle <= 180.0) {
            return Err(Error::InvalidAngle(self.angle));
        }
        if self.max_candidates == 0 {
            return Err(Error::InvalidParam("max_candidates must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a discovery run.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSet {
    pub method: Method,
    /// Chains not contained in any longer chain of the same method.
    pub maximal: Vec<Chain>,
    /// Every chain eligible for ranking, deduplicated.
    pub candidates: Vec<Chain>,
    pub params: DiscoveryParams,
    /// Set when `max_candidates` cut the candidate list.
    pub truncated: bool,
}

pub fn backward_chain(ps: &ProfileSet, start: usize) -> Result<Chain> {
    ps.check_index(start)?;
    let mut nodes = vec![start];
    let mut cur = start;
    while let Some(prev) = ps.lnn(cur) {
        nodes.push(prev);
        cur = prev;
    }
    Ok(Chain::from_backward(ChainTag::Backward, nodes))
}

pub fn forward_chain(ps: &ProfileSet, start: usize) -> Result<Chain> {
    ps.check_index(start)?;
    let mut nodes = vec![start];
    let mut cur = start;
    while let Some(next) = ps.rnn(cur) {
        nodes.push(next);
        cur = next;
    }
    Ok(Chain::new(ChainTag::Forward, nodes))
}

pub fn critical_nodes(ps: &ProfileSet) -> CriticalSet {
    let members = (0..ps.window_count())
        .map(|i| ps.lnn(i).is_some_and(|p| ps.in_inns(p, i)))
        .collect();
    CriticalSet { members }
}

/// Grows a TSC22 chain backward from `start`, which acts as the first
/// anchor. Returns nodes latest-first and marks every node in `visited`.
fn grow_tsc22(ps: &ProfileSet, critical: &CriticalSet, start: usize, visited: &mut [bool]) -> Vec<usize> {
    let mut nodes = vec![start];
    visited[start] = true;
    let mut anchor = start;
    let mut cur = start;
    while let Some(prev) = ps.lnn(cur) {
        if !ps.in_inns(prev, anchor) {
            break;
        }
        nodes.push(prev);
        visited[prev] = true;
        cur = prev;
        if critical.contains(prev) {
            anchor = prev;
        }
    }
    nodes
}

pub fn discover_tsc22(ps: &ProfileSet) -> ChainSet {
    discover_tsc22_with(ps, &DiscoveryParams::default())
}

/// All TSC22 chains: critical nodes are visited in reverse time order and
/// each unvisited one seeds a maximal chain (a visited one can only yield a
/// sub-chain of a chain already found).
pub fn discover_tsc22_with(ps: &ProfileSet, params: &DiscoveryParams) -> ChainSet {
    let critical = critical_nodes(ps);
    let mut visited = vec![false; ps.window_count()];
    let mut maximal = Vec::new();
    for s in critical.indices().into_iter().rev() {
        if visited[s] {
            continue;
        }
        let nodes = grow_tsc22(ps, &critical, s, &mut visited);
        if nodes.len() >= 2 {
            maximal.push(nodes);
        }
    }

    // sub-chains whose latest node is critical are valid chains on their own
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for chain in &maximal {
        for (p, &head) in chain.iter().enumerate() {
            if !critical.contains(head) {
                continue;
            }
            for q in p + 1..chain.len() {
                let sub = &chain[p..=q];
                if seen.insert(sub.to_vec()) {
                    candidates.push(Chain::from_backward(ChainTag::Tsc22, sub.to_vec()));
                }
            }
        }
    }
    let maximal = maximal.into_iter().map(|n| Chain::from_backward(ChainTag::Tsc22, n)).collect();
    finish(Method::Tsc22, maximal, candidates, params.clone())
}

/// Window `prev` is the mutual nearest neighbor of `cur`.
fn mutual_link(ps: &ProfileSet, cur: usize) -> Option<usize> {
    ps.lnn(cur).filter(|&p| ps.rnn(p) == Some(cur))
}

fn grow_tsc17(ps: &ProfileSet, start: usize) -> Vec<usize> {
    let mut nodes = vec![start];
    let mut cur = start;
    while let Some(prev) = mutual_link(ps, cur) {
        nodes.push(prev);
        cur = prev;
    }
    nodes
}

pub fn discover_tsc17(ps: &ProfileSet) -> ChainSet {
    discover_tsc17_with(ps, &DiscoveryParams::default())
}

/// Mutual links form vertex-disjoint paths; each path is a maximal chain
/// and every contiguous piece of it is a candidate.
pub fn discover_tsc17_with(ps: &ProfileSet, params: &DiscoveryParams) -> ChainSet {
    let w = ps.window_count();
    let mut has_successor = vec![false; w];
    for i in 0..w {
        if let Some(p) = mutual_link(ps, i) {
            has_successor[p] = true;
        }
    }
    let mut maximal = Vec::new();
    let mut candidates = Vec::new();
    for head in (0..w).rev() {
        if has_successor[head] || mutual_link(ps, head).is_none() {
            continue;
        }
        let nodes = grow_tsc17(ps, head);
        for p in 0..nodes.len() {
            for q in p + 1..nodes.len() {
                candidates.push(Chain::from_backward(ChainTag::Tsc17, nodes[p..=q].to_vec()));
            }
        }
        maximal.push(Chain::from_backward(ChainTag::Tsc17, nodes));
    }
    finish(Method::Tsc17, maximal, candidates, params.clone())
}

/// Direction angle in degrees between `a - anchor` and `b - anchor`.
/// Defined as 0 when either difference vector is (numerically) zero.
pub fn direction_angle(anchor: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for ((x0, xa), xb) in anchor.iter().zip(a).zip(b) {
        let (u, v) = (xa - x0, xb - x0);
        dot += u * v;
        na += u * u;
        nb += v * v;
    }
    let (na, nb) = (na.sqrt(), nb.sqrt());
    if na < ANGLE_NORM_EPS || nb < ANGLE_NORM_EPS {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}

fn angle_ok(angle: f64, theta: f64) -> bool {
    theta >= 180.0 || angle <= theta
}

/// Grows a TSC20 chain backward from `anchor`; nodes latest-first.
fn grow_tsc20(ps: &ProfileSet, ctx: &DistanceContext<'_>, anchor: usize, theta: f64) -> Vec<usize> {
    let mut nodes = vec![anchor];
    let Some(second) = ps.lnn(anchor) else { return nodes };
    nodes.push(second);
    let x0 = ctx.window_vector(anchor);
    let mut cur = second;
    let mut x_cur = ctx.window_vector(second);
    while let Some(prev) = ps.lnn(cur) {
        let x_prev = ctx.window_vector(prev);
        if !angle_ok(direction_angle(&x0, &x_cur, &x_prev), theta) {
            break;
        }
        nodes.push(prev);
        cur = prev;
        x_cur = x_prev;
    }
    nodes
}

pub fn discover_tsc20(ps: &ProfileSet, ts: &TimeSeries, theta: f64) -> Result<ChainSet> {
    let params = DiscoveryParams { angle: theta, ..DiscoveryParams::default() };
    let ctx = DistanceContext::new(ts, ps.spec())?;
    discover_tsc20_with(ps, &ctx, &params)
}

/// Grows a TSC20 chain from every window as anchor. Every prefix of a
/// growth is a valid chain; a growth is maximal unless another anchor's
/// growth passes through it and reaches at least as far back.
pub fn discover_tsc20_with(
    ps: &ProfileSet,
    ctx: &DistanceContext<'_>,
    params: &DiscoveryParams,
) -> Result<ChainSet> {
    params.validate()?;
    let w = ps.window_count();
    let growths: Vec<Vec<usize>> = (0..w).map(|a| grow_tsc20(ps, ctx, a, params.angle)).collect();

    // earliest node reached by any growth that passes through x after its anchor
    let mut reach = vec![usize::MAX; w];
    for g in &growths {
        let end = *g.last().unwrap();
        for &x in &g[1..] {
            reach[x] = reach[x].min(end);
        }
    }
    let mut maximal = Vec::new();
    let mut candidates = Vec::new();
    for g in growths.into_iter().rev() {
        if g.len() < 2 {
            continue;
        }
        for q in 2..=g.len() {
            candidates.push(Chain::from_backward(ChainTag::Tsc20, g[..q].to_vec()));
        }
        let end = *g.last().unwrap();
        if reach[g[0]] > end {
            maximal.push(Chain::from_backward(ChainTag::Tsc20, g));
        }
    }
    Ok(finish(Method::Tsc20, maximal, candidates, params.clone()))
}

/// Runs the chosen method. `ctx` must be built from the same series and
/// window spec as `ps`.
pub fn discover(
    method: Method,
    ps: &ProfileSet,
    ctx: &DistanceContext<'_>,
    params: &DiscoveryParams,
) -> Result<ChainSet> {
    params.validate()?;
    match method {
        Method::Tsc17 => Ok(discover_tsc17_with(ps, params)),
        Method::Tsc20 => discover_tsc20_with(ps, ctx, params),
        Method::Tsc22 => Ok(discover_tsc22_with(ps, params)),
    }
}

/// Grows a single chain of `method` backward from a forced `start`.
///
/// For TSC22 the start acts as the initial anchor even if it is not
/// critical; for TSC20 it is the angle anchor.
pub fn grow_forced(
    ps: &ProfileSet,
    ctx: &DistanceContext<'_>,
    start: usize,
    method: Method,
    params: &DiscoveryParams,
) -> Result<Chain> {
    ps.check_index(start)?;
    params.validate()?;
    let nodes = match method {
        Method::Tsc17 => grow_tsc17(ps, start),
        Method::Tsc20 => grow_tsc20(ps, ctx, start, params.angle),
        Method::Tsc22 => {
            let critical = critical_nodes(ps);
            let mut visited = vec![false; ps.window_count()];
            grow_tsc22(ps, &critical, start, &mut visited)
        }
    };
    Ok(Chain::from_backward(ChainTag::Forced, nodes))
}

/// Canonical candidate order: longest first, then earliest latest node,
/// then lexicographic nodes.
pub(crate) fn canonical_cmp(a: &Chain, b: &Chain) -> std::cmp::Ordering {
    b.len()
        .cmp(&a.len())
        .then_with(|| a.latest().cmp(&b.latest()))
        .then_with(|| a.nodes.cmp(&b.nodes))
}

fn finish(
    method: Method,
    mut maximal: Vec<Chain>,
    mut candidates: Vec<Chain>,
    params: DiscoveryParams,
) -> ChainSet {
    maximal.sort_by(canonical_cmp);
    candidates.sort_by(canonical_cmp);
    let truncated = candidates.len() > params.max_candidates;
    candidates.truncate(params.max_candidates);
    ChainSet { method, maximal, candidates, params, truncated }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::compute_profiles;
    use crate::series::WindowSpec;

    const LADDER: [f64; 13] =
        [40.0, 20.0, 1.0, 23.0, 2.0, 58.0, 3.0, 36.0, 3.3, 34.0, 4.0, 43.0, 5.0];
    const FLIPPED: [f64; 13] =
        [40.0, 20.0, 1.0, 23.0, 2.0, 58.0, 3.3, 36.0, 3.0, 34.0, 4.0, 43.0, 5.0];

    fn setup(v: &[f64]) -> (TimeSeries, ProfileSet) {
        let ts = TimeSeries::new(v.to_vec()).unwrap();
        let ps = compute_profiles(&ts, WindowSpec::raw(1).unwrap()).unwrap();
        (ts, ps)
    }

    /// Window starts of the given values, in increasing time order.
    fn starts(v: &[f64], xs: &[f64]) -> Vec<usize> {
        let mut out: Vec<usize> = xs.iter().map(|&x| v.iter().position(|&y| y == x).unwrap()).collect();
        out.sort_unstable();
        out
    }

    #[test]
    fn backward_chain_ladder() {
        let (_, ps) = setup(&LADDER);
        let c = backward_chain(&ps, 12).unwrap();
        assert_eq!(c.nodes, starts(&LADDER, &[5.0, 4.0, 3.3, 3.0, 2.0, 1.0, 20.0, 40.0]));
        assert_eq!(backward_chain(&ps, 0).unwrap().nodes, vec![0]);
    }

    #[test]
    fn backward_chain_doubling() {
        let (_, ps) = setup(&[1.0, 2.0, 4.0, 8.0]);
        assert_eq!(backward_chain(&ps, 3).unwrap().nodes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn forward_chain_follows_rnn() {
        let (_, ps) = setup(&[1.0, 2.0, 4.0, 8.0]);
        assert_eq!(forward_chain(&ps, 0).unwrap().nodes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn critical_nodes_flipped() {
        let (_, ps) = setup(&FLIPPED);
        let crit = critical_nodes(&ps);
        let on_chain: Vec<usize> = backward_chain(&ps, 12)
            .unwrap()
            .nodes
            .into_iter()
            .filter(|&i| crit.contains(i))
            .collect();
        assert_eq!(on_chain, starts(&FLIPPED, &[5.0, 4.0, 2.0]));
        // 3.3 is not critical: its LNN is 2 and INNS(2) = {3, 4, 5}
        assert!(!crit.contains(6));
        assert_eq!(ps.lnn(6), Some(4));
    }

    #[test]
    fn tsc22_worked_example() {
        let (_, ps) = setup(&FLIPPED);
        let set = discover_tsc22(&ps);
        let expected = starts(&FLIPPED, &[1.0, 2.0, 3.3, 4.0, 5.0]);
        assert!(set.maximal.iter().any(|c| c.nodes == expected));
        assert_eq!(set.maximal[0].nodes, expected);
    }

    #[test]
    fn tsc22_arithmetic_series_is_one_chain() {
        let v: Vec<f64> = (0..12).map(|i| 3.0 * i as f64 + 1.0).collect();
        let (_, ps) = setup(&v);
        let set = discover_tsc22(&ps);
        assert_eq!(set.maximal.len(), 1);
        assert_eq!(set.maximal[0].nodes, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn tsc17_examples() {
        let (_, ps) = setup(&LADDER);
        let set = discover_tsc17(&ps);
        assert_eq!(set.maximal[0].nodes, starts(&LADDER, &[1.0, 2.0, 3.0, 3.3, 4.0, 5.0]));

        let (_, ps) = setup(&FLIPPED);
        let set = discover_tsc17(&ps);
        assert!(set.maximal.iter().any(|c| c.nodes == starts(&FLIPPED, &[4.0, 5.0])));

        let (_, ps) = setup(&[1.0, 2.0, 4.0, 8.0]);
        let set = discover_tsc17(&ps);
        assert_eq!(set.maximal.len(), 1);
        assert_eq!(set.maximal[0].nodes, vec![0, 1, 2, 3]);
        // all contiguous pieces of length >= 2
        assert_eq!(set.candidates.len(), 6);
    }

    #[test]
    fn angle_plane_geometry() {
        let a = direction_angle(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]);
        assert!((a - 45.0).abs() < 1e-12);
        assert!(angle_ok(a, 50.0));
        assert!(!angle_ok(a, 40.0));
        assert_eq!(direction_angle(&[1.0, 1.0], &[1.0, 1.0], &[3.0, 0.0]), 0.0);
        assert!(angle_ok(180.0, 180.0));
    }

    #[test]
    fn tsc20_theta_180_is_backward_chain() {
        let (ts, ps) = setup(&LADDER);
        let ctx = DistanceContext::new(&ts, ps.spec()).unwrap();
        let params = DiscoveryParams { angle: 180.0, ..Default::default() };
        for s in 0..ps.window_count() {
            let forced = grow_forced(&ps, &ctx, s, Method::Tsc20, &params).unwrap();
            assert_eq!(forced.nodes, backward_chain(&ps, s).unwrap().nodes);
        }
    }

    #[test]
    fn tsc20_rejects_bad_theta() {
        let (ts, ps) = setup(&LADDER);
        assert!(matches!(discover_tsc20(&ps, &ts, 0.0), Err(Error::InvalidAngle(_))));
        assert!(matches!(discover_tsc20(&ps, &ts, 190.0), Err(Error::InvalidAngle(_))));
    }

    #[test]
    fn forced_growth() {
        let (ts, ps) = setup(&FLIPPED);
        let ctx = DistanceContext::new(&ts, ps.spec()).unwrap();
        let p = DiscoveryParams::default();
        let c = grow_forced(&ps, &ctx, 12, Method::Tsc22, &p).unwrap();
        assert_eq!(c.nodes, discover_tsc22(&ps).maximal[0].nodes);
        assert_eq!(c.tag, ChainTag::Forced);
        // LNN(3.3) = 2 but RNN(2) = 3, so no mutual link
        let c = grow_forced(&ps, &ctx, 6, Method::Tsc17, &p).unwrap();
        assert_eq!(c.nodes, vec![6]);
    }

    #[test]
    fn candidate_cap_keeps_longest() {
        let v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let (_, ps) = setup(&v);
        let params = DiscoveryParams { max_candidates: 3, ..Default::default() };
        let set = discover_tsc17_with(&ps, &params);
        assert!(set.truncated);
        assert_eq!(set.candidates.len(), 3);
        assert_eq!(set.candidates[0].len(), 10);
        assert!(set.candidates.iter().all(|c| c.len() >= 9));
    }
}
