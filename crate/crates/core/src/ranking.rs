//! Chain quality scores and ranking.
//!
//! The effective length is the end-to-end distance of a chain measured in
//! units of its largest single step, rounded to an integer; noise-like
//! chains score about 1. The correlation length sums `|r| * r` over
//! consecutive node pairs and approaches `m - 1` for smooth chains. TSC22
//! ranks by effective length first and breaks ties by correlation length.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::{Chain, Method};
use crate::error::{Error, Result};
use crate::series::DistanceContext;

/// Floor applied to the largest consecutive distance.
pub const MIN_STEP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainScore {
    pub eff_raw: f64,
    pub eff_len: u64,
    pub corr_len: f64,
    /// Largest distance between consecutive nodes.
    pub max_step: f64,
    /// The largest step fell below [`MIN_STEP`] and was floored.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedChain {
    pub chain: Chain,
    pub score: ChainScore,
}

fn check_len(chain: &Chain) -> Result<()> {
    if chain.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "scoring needs at least 2 nodes, chain has {}",
            chain.len()
        )));
    }
    Ok(())
}

/// Returns `(effRaw, effLen, maxStep, flagged)`.
pub fn effective_length(ctx: &DistanceContext<'_>, chain: &Chain) -> Result<(f64, u64, f64, bool)> {
    check_len(chain)?;
    let nodes = &chain.nodes;
    let span = ctx.distance(nodes[0], nodes[nodes.len() - 1]);
    let max_step = nodes
        .windows(2)
        .map(|p| ctx.distance(p[0], p[1]))
        .fold(0.0_f64, f64::max);
    let (eff_raw, flagged) = if max_step < MIN_STEP {
        if span == 0.0 {
            (0.0, true)
        } else {
            (span / MIN_STEP, true)
        }
    } else {
        (span / max_step, false)
    };
    // f64::round rounds half away from zero
    let eff_len = if eff_raw.is_finite() { eff_raw.round() as u64 } else { u64::MAX };
    Ok((eff_raw, eff_len, max_step, flagged))
}

/// Sum of `|r| * r` over consecutive pairs, where `r` is the Pearson
/// correlation of the two windows. A pair involving a flat window
/// contributes -1.
pub fn correlation_length(ctx: &DistanceContext<'_>, chain: &Chain) -> Result<f64> {
    check_len(chain)?;
    Ok(chain
        .nodes
        .windows(2)
        .map(|p| match ctx.correlation(p[0], p[1]) {
            Some(r) => r.abs() * r,
            None => -1.0,
        })
        .sum())
}

pub fn score_chain(ctx: &DistanceContext<'_>, chain: &Chain) -> Result<ChainScore> {
    let (eff_raw, eff_len, max_step, flagged) = effective_length(ctx, chain)?;
    let corr_len = correlation_length(ctx, chain)?;
    Ok(ChainScore { eff_raw, eff_len, corr_len, max_step, flagged })
}

fn score_all(ctx: &DistanceContext<'_>, cands: &[Chain]) -> Vec<RankedChain> {
    cands
        .par_iter()
        .filter(|c| c.len() >= 2)
        .map(|c| RankedChain { chain: c.clone(), score: score_chain(ctx, c).expect("length checked") })
        .collect()
}

fn tail_order(a: &RankedChain, b: &RankedChain) -> Ordering {
    b.chain
        .len()
        .cmp(&a.chain.len())
        .then_with(|| a.chain.latest().cmp(&b.chain.latest()))
        .then_with(|| a.chain.nodes.cmp(&b.chain.nodes))
}

fn two_stage_order(a: &RankedChain, b: &RankedChain) -> Ordering {
    b.score
        .eff_len
        .cmp(&a.score.eff_len)
        .then_with(|| b.score.corr_len.total_cmp(&a.score.corr_len))
        .then_with(|| tail_order(a, b))
}

/// Effective length descending, then correlation length descending, then
/// longer chains, then earlier latest node. Returns at most `topk` chains.
pub fn rank_two_stage(ctx: &DistanceContext<'_>, cands: &[Chain], topk: usize) -> Vec<RankedChain> {
    let mut scored = score_all(ctx, cands);
    scored.sort_by(two_stage_order);
    scored.truncate(topk);
    scored
}

/// Ranking used by the baselines: TSC17 by chain length (ties: the most
/// recent chain), TSC20 by effective length then its unrounded value.
pub fn rank_baseline(
    ctx: &DistanceContext<'_>,
    cands: &[Chain],
    method: Method,
    topk: usize,
) -> Vec<RankedChain> {
    let mut scored = score_all(ctx, cands);
    match method {
        Method::Tsc17 => scored.sort_by(|a, b| {
            b.chain
                .len()
                .cmp(&a.chain.len())
                .then_with(|| b.chain.latest().cmp(&a.chain.latest()))
                .then_with(|| a.score.max_step.total_cmp(&b.score.max_step))
                .then_with(|| tail_order(a, b))
        }),
        Method::Tsc20 => scored.sort_by(|a, b| {
            b.score
                .eff_len
                .cmp(&a.score.eff_len)
                .then_with(|| b.score.eff_raw.total_cmp(&a.score.eff_raw))
                .then_with(|| tail_order(a, b))
        }),
        Method::Tsc22 => scored.sort_by(two_stage_order),
    }
    scored.truncate(topk);
    scored
}

/// The ranking each method is evaluated with.
pub fn rank(ctx: &DistanceContext<'_>, cands: &[Chain], method: Method, topk: usize) -> Vec<RankedChain> {
    match method {
        Method::Tsc22 => rank_two_stage(ctx, cands, topk),
        other => rank_baseline(ctx, cands, other, topk),
    }
}
