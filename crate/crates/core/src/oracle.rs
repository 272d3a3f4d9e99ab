//! Definition-literal reference implementations.
//!
//! Everything here favors obviousness over speed: distances come from a
//! dense matrix, every INNS membership is tested against its defining
//! predicate, and chains are validated one candidate node sequence at a
//! time. Size guards keep the oracles away from large inputs.

use std::collections::BTreeSet;

use crate::chains::{canonical_cmp, Chain, ChainSet, DiscoveryParams, Method};
use crate::error::{Error, Result};
use crate::profiles::ProfileSet;
use crate::series::{DistanceContext, DistanceMode, TimeSeries, WindowSpec, DEGENERATE_SIGMA};

pub const PROFILE_GUARD: usize = 2048;
pub const CHAIN_GUARD: usize = 256;

/// Full `w x w` distance matrix; entries inside the exclusion band are `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseDistances {
    w: usize,
    data: Vec<f64>,
}

impl DenseDistances {
    pub fn new(ts: &TimeSeries, spec: WindowSpec) -> Result<Self> {
        let ctx = DistanceContext::new(ts, spec)?;
        let w = ctx.window_count();
        let mut data = vec![f64::INFINITY; w * w];
        for i in 0..w {
            for j in 0..w {
                if spec.admissible(i, j) {
                    data[i * w + j] = ctx.distance(i, j);
                }
            }
        }
        Ok(Self { w, data })
    }

    pub fn size(&self) -> usize {
        self.w
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.w + j]
    }
}

fn guard(windows: usize, limit: usize) -> Result<()> {
    if windows > limit {
        return Err(Error::GuardExceeded { windows, limit });
    }
    Ok(())
}

/// Left/right profiles and INNS computed straight from their definitions.
pub fn brute_profiles(ts: &TimeSeries, spec: WindowSpec) -> Result<ProfileSet> {
    let w = spec.windows_in(ts)?;
    guard(w, PROFILE_GUARD)?;
    let dm = DenseDistances::new(ts, spec)?;

    let mut left = Vec::with_capacity(w);
    let mut right = Vec::with_capacity(w);
    let mut inns = Vec::with_capacity(w);
    for i in 0..w {
        // LNN: smallest distance; among equals the latest (closest) window
        let mut best = (f64::INFINITY, None);
        for j in 0..i {
            let d = dm.get(i, j);
            if d.is_finite() && d <= best.0 {
                best = (d, Some(j));
            }
        }
        left.push(best);

        // RNN: smallest distance; among equals the latest window
        let mut best = (f64::INFINITY, None);
        for j in i + 1..w {
            let d = dm.get(i, j);
            if d.is_finite() && d <= best.0 {
                best = (d, Some(j));
            }
        }
        right.push(best);

        // j is in INNS(i) iff d(i, j) < d(i, k) for every k > j
        let set: Vec<usize> = (i + 1..w)
            .filter(|&j| {
                let d = dm.get(i, j);
                d.is_finite() && (j + 1..w).all(|k| d < dm.get(i, k))
            })
            .collect();
        inns.push(set);
    }
    Ok(ProfileSet::from_parts(spec, left, right, inns))
}

/// Window as a vector in the mode's space, computed independently of
/// [`crate::series`].
fn plain_vector(ts: &TimeSeries, spec: WindowSpec, i: usize) -> Vec<f64> {
    let win = ts.window(i, spec.len);
    match spec.mode {
        DistanceMode::Raw => win.to_vec(),
        DistanceMode::Znorm => {
            let n = win.len() as f64;
            let mean = win.iter().sum::<f64>() / n;
            let sd = (win.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd < DEGENERATE_SIGMA {
                vec![0.0; win.len()]
            } else {
                win.iter().map(|v| (v - mean) / sd).collect()
            }
        }
    }
}

fn angle_degrees(anchor: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let u: Vec<f64> = a.iter().zip(anchor).map(|(x, y)| x - y).collect();
    let v: Vec<f64> = b.iter().zip(anchor).map(|(x, y)| x - y).collect();
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu < 1e-12 || nv < 1e-12 {
        return 0.0;
    }
    let cos = u.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() / (nu * nv);
    cos.clamp(-1.0, 1.0).acos().to_degrees()
}

fn is_critical(ps: &ProfileSet, i: usize) -> bool {
    match ps.lnn(i) {
        Some(p) => ps.inns_table()[p].contains(&i),
        None => false,
    }
}

/// Tests a latest-first node sequence against a chain definition.
/// Assumes consecutive nodes are already linked by LNN.
fn satisfies(
    method: Method,
    seq: &[usize],
    ps: &ProfileSet,
    ts: &TimeSeries,
    params: &DiscoveryParams,
) -> bool {
    match method {
        Method::Tsc17 => seq.windows(2).all(|p| ps.rnn(p[1]) == Some(p[0])),
        Method::Tsc20 => {
            let spec = ps.spec();
            let x: Vec<Vec<f64>> = seq.iter().map(|&i| plain_vector(ts, spec, i)).collect();
            (1..seq.len() - 1).all(|i| {
                params.angle >= 180.0 || angle_degrees(&x[0], &x[i], &x[i + 1]) <= params.angle
            })
        }
        Method::Tsc22 => {
            if !is_critical(ps, seq[0]) {
                return false;
            }
            (1..seq.len()).all(|i| {
                // the critical node closest before position i along the chain
                let anchor = (0..i).rev().map(|k| seq[k]).find(|&c| is_critical(ps, c)).unwrap();
                ps.inns_table()[seq[i]].contains(&anchor)
            })
        }
    }
}

fn contains_segment(outer: &[usize], inner: &[usize]) -> bool {
    inner.len() < outer.len() && outer.windows(inner.len()).any(|w| w == inner)
}

/// Every chain of `method`, found by validating each prefix of the backward
/// chain from every window. (Any contiguous segment of a backward chain is a
/// prefix of the backward chain from its own first node.)
pub fn brute_chains(
    ts: &TimeSeries,
    spec: WindowSpec,
    method: Method,
    params: &DiscoveryParams,
) -> Result<ChainSet> {
    params.validate()?;
    let w = spec.windows_in(ts)?;
    guard(w, CHAIN_GUARD)?;
    let ps = brute_profiles(ts, spec)?;

    let mut valid: BTreeSet<Vec<usize>> = BTreeSet::new();
    for s in 0..w {
        let mut backward = vec![s];
        while let Some(p) = ps.lnn(*backward.last().unwrap()) {
            backward.push(p);
        }
        for q in 2..=backward.len() {
            if satisfies(method, &backward[..q], &ps, ts, params) {
                valid.insert(backward[..q].to_vec());
            }
        }
    }

    let maximal: Vec<Chain> = valid
        .iter()
        .filter(|a| !valid.iter().any(|b| contains_segment(b, a)))
        .map(|n| to_chain(method, n))
        .collect();
    let candidates: Vec<Chain> = valid.iter().map(|n| to_chain(method, n)).collect();

    let mut maximal = maximal;
    let mut candidates = candidates;
    maximal.sort_by(canonical_cmp);
    candidates.sort_by(canonical_cmp);
    let truncated = candidates.len() > params.max_candidates;
    candidates.truncate(params.max_candidates);
    Ok(ChainSet { method, maximal, candidates, params: params.clone(), truncated })
}

fn to_chain(method: Method, latest_first: &[usize]) -> Chain {
    let mut nodes = latest_first.to_vec();
    nodes.reverse();
    Chain::new(method.tag(), nodes)
}

/// Raw-mode series (window length 2) whose designated windows equal the
/// given planar points, in the given time order.
///
/// Points are laid out with stride 4: `x, y, f, f` where the filler `f`
/// grows tenfold per point, so filler windows are far from every point
/// window and from each other. Returns the series and the designated
/// window starts.
pub fn geometry_builder(points: &[(f64, f64)]) -> Result<(TimeSeries, Vec<usize>)> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidParam("points must be finite".into()));
    }
    let mut values = Vec::with_capacity(points.len() * 4);
    let mut starts = Vec::with_capacity(points.len());
    let mut filler = 1e6;
    for &(x, y) in points {
        starts.push(values.len());
        values.extend([x, y, filler, filler]);
        filler *= 10.0;
    }
    Ok((TimeSeries::new(values)?, starts))
}

/// Window spec used with [`geometry_builder`] series.
pub fn geometry_spec() -> WindowSpec {
    WindowSpec::raw(2).expect("valid spec")
}
