//! Left/right matrix profiles and incremental nearest neighbor sets.
//!
//! [`compute_profiles`] makes a single pass over the upper triangle of the
//! distance matrix. Row `i` holds the distances from window `i` to every
//! admissible window on its right; scanning that row right-to-left yields
//! the right nearest neighbor and the incremental nearest neighbor set
//! (INNS) of `i`, while the same distances seen column-wise give every
//! window its left nearest neighbor.
//!
//! Tie-breaking is fixed so results do not depend on evaluation order:
//! * the left nearest neighbor prefers the candidate closest in time;
//! * a window enters an INNS only on a strict decrease of the running
//!   minimum, so among equally distant right candidates the latest one is
//!   kept, and the right nearest neighbor is chosen the same way so that it
//!   is always a member of the INNS.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{DistanceContext, DistanceMode, TimeSeries, WindowSpec};

/// Rows per work unit. Each unit restarts the dot-product recurrence with a
/// direct row, so output bits depend on this constant but never on the
/// number of worker threads.
const BLOCK_ROWS: usize = 512;

#[derive(Clone, Debug, Default)]
pub struct ProfileOptions {
    /// Abort when the INNS table holds more than this many entries in total.
    pub max_inns_total: Option<usize>,
}

/// Nearest-neighbor index over all windows of a series.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSet {
    spec: WindowSpec,
    left_dist: Vec<f64>,
    left_idx: Vec<Option<usize>>,
    right_dist: Vec<f64>,
    right_idx: Vec<Option<usize>>,
    inns: Vec<Vec<usize>>,
}

impl ProfileSet {
    pub(crate) fn from_parts(
        spec: WindowSpec,
        left: Vec<(f64, Option<usize>)>,
        right: Vec<(f64, Option<usize>)>,
        inns: Vec<Vec<usize>>,
    ) -> Self {
        let (left_dist, left_idx) = left.into_iter().unzip();
        let (right_dist, right_idx) = right.into_iter().unzip();
        Self { spec, left_dist, left_idx, right_dist, right_idx, inns }
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn window_count(&self) -> usize {
        self.left_idx.len()
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.window_count() {
            return Err(Error::IndexOutOfRange { index: i, windows: self.window_count() });
        }
        Ok(())
    }

    /// Left nearest neighbor of window `i`.
    pub fn lnn(&self, i: usize) -> Option<usize> {
        self.left_idx[i]
    }

    /// Right nearest neighbor of window `i`.
    pub fn rnn(&self, i: usize) -> Option<usize> {
        self.right_idx[i]
    }

    pub fn left_dist(&self) -> &[f64] {
        &self.left_dist
    }

    pub fn right_dist(&self) -> &[f64] {
        &self.right_dist
    }

    pub fn left_idx(&self) -> &[Option<usize>] {
        &self.left_idx
    }

    pub fn right_idx(&self) -> &[Option<usize>] {
        &self.right_idx
    }

    pub fn inns_table(&self) -> &[Vec<usize>] {
        &self.inns
    }

    /// INNS of window `i` in ascending index order.
    pub fn inns_of(&self, i: usize) -> Result<&[usize]> {
        self.check_index(i)?;
        Ok(&self.inns[i])
    }

    /// Membership test on the sorted INNS of `i`.
    pub fn in_inns(&self, i: usize, candidate: usize) -> bool {
        self.inns[i].binary_search(&candidate).is_ok()
    }

    pub fn inns_total(&self) -> usize {
        self.inns.iter().map(Vec::len).sum()
    }
}

/// Distances from one query window to every window of the series.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceRow {
    pub query: usize,
    /// `+inf` inside the exclusion zone and for flat windows in znorm mode.
    pub distances: Vec<f64>,
}

pub fn distance_profile(ts: &TimeSeries, i: usize, spec: WindowSpec) -> Result<DistanceRow> {
    spec.windows_in(ts)?;
    let ctx = DistanceContext::new(ts, spec)?;
    ctx.check_index(i)?;
    let distances = (0..ctx.window_count())
        .map(|j| if spec.admissible(i, j) { ctx.distance(i, j) } else { f64::INFINITY })
        .collect();
    Ok(DistanceRow { query: i, distances })
}

pub fn compute_profiles(ts: &TimeSeries, spec: WindowSpec) -> Result<ProfileSet> {
    compute_profiles_with(ts, spec, &ProfileOptions::default())
}

/// Exact left/right matrix profiles and INNS table in O(w^2) time.
///
/// Rows are processed in blocks of [`BLOCK_ROWS`] on the current rayon
/// pool; run inside `ThreadPool::install` to bound the worker count.
pub fn compute_profiles_with(
    ts: &TimeSeries,
    spec: WindowSpec,
    opts: &ProfileOptions,
) -> Result<ProfileSet> {
    let w = spec
        .windows_in(ts)
        .map_err(|_| Error::TooShort("series too short for profiling".into()))?;
    let kernel = Kernel::new(ts, spec)?;

    let starts: Vec<usize> = (0..w).step_by(BLOCK_ROWS).collect();
    let blocks: Vec<BlockOut> = starts
        .par_iter()
        .map(|&b0| kernel.block(b0, (b0 + BLOCK_ROWS).min(w)))
        .collect();

    let mut left = vec![(f64::INFINITY, None::<usize>); w];
    let mut right = Vec::with_capacity(w);
    let mut inns = Vec::with_capacity(w);
    for block in blocks {
        for (k, &(d, i)) in block.col_best.iter().enumerate() {
            let Some(i) = i else { continue };
            let j = block.col_start + k;
            let cur = &mut left[j];
            // closer in time (larger i) wins exact ties
            if d < cur.0 || (d == cur.0 && cur.1.is_none_or(|c| i > c)) {
                *cur = (d, Some(i));
            }
        }
        right.extend(block.right);
        inns.extend(block.inns);
    }

    let total: usize = inns.iter().map(Vec::len).sum();
    if let Some(cap) = opts.max_inns_total {
        if total > cap {
            return Err(Error::InnsCapExceeded { cap });
        }
    }
    Ok(ProfileSet::from_parts(spec, left, right, inns))
}

struct BlockOut {
    right: Vec<(f64, Option<usize>)>,
    inns: Vec<Vec<usize>>,
    /// Best left candidate for columns `col_start..w` seen in this block.
    col_start: usize,
    col_best: Vec<(f64, Option<usize>)>,
}

struct Kernel<'a> {
    spec: WindowSpec,
    w: usize,
    raw: &'a [f64],
    /// Series shifted by its global mean, which keeps the dot products small.
    centered: Vec<f64>,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    degenerate: Vec<bool>,
}

impl<'a> Kernel<'a> {
    fn new(ts: &'a TimeSeries, spec: WindowSpec) -> Result<Self> {
        let w = ts.window_count(spec.len);
        let raw = ts.values();
        let (centered, mean, inv_std, degenerate) = match spec.mode {
            DistanceMode::Raw => (Vec::new(), Vec::new(), Vec::new(), vec![false; w]),
            DistanceMode::Znorm => {
                let global = raw.iter().sum::<f64>() / raw.len() as f64;
                let centered: Vec<f64> = raw.iter().map(|v| v - global).collect();
                let shifted = TimeSeries::new(centered.clone())?;
                let stats = crate::series::rolling_stats(&shifted, spec.len)?;
                let inv_std = stats
                    .std
                    .iter()
                    .zip(&stats.degenerate)
                    .map(|(s, &flat)| if flat { 0.0 } else { 1.0 / s })
                    .collect();
                (centered, stats.mean, inv_std, stats.degenerate)
            }
        };
        Ok(Self { spec, w, raw, centered, mean, inv_std, degenerate })
    }

    fn block(&self, b0: usize, b1: usize) -> BlockOut {
        let w = self.w;
        let excl = self.spec.exclusion;
        let col_start = (b0 + excl).min(w);
        let mut col_best = vec![(f64::INFINITY, None); w - col_start];
        let mut right = Vec::with_capacity(b1 - b0);
        let mut inns = Vec::with_capacity(b1 - b0);
        let mut qt = match self.spec.mode {
            DistanceMode::Znorm => vec![0.0; w],
            DistanceMode::Raw => Vec::new(),
        };
        let mut row = vec![f64::INFINITY; w];

        for i in b0..b1 {
            let lo = i + excl;
            if lo >= w {
                right.push((f64::INFINITY, None));
                inns.push(Vec::new());
                continue;
            }
            match self.spec.mode {
                DistanceMode::Raw => self.raw_row(i, lo, &mut row),
                DistanceMode::Znorm => self.znorm_row(i, lo, i == b0, &mut qt, &mut row),
            }

            let mut best = f64::INFINITY;
            let mut best_j = None;
            let mut set = Vec::new();
            for j in (lo..w).rev() {
                let d = row[j];
                if !d.is_finite() {
                    continue;
                }
                if d < best {
                    best = d;
                    best_j = Some(j);
                    set.push(j);
                }
                // rows ascend within a block, so a tie means a later i, i.e. closer to j
                let slot = &mut col_best[j - col_start];
                if d <= slot.0 {
                    *slot = (d, Some(i));
                }
            }
            set.reverse();
            right.push((best, best_j));
            inns.push(set);
        }
        BlockOut { right, inns, col_start, col_best }
    }

    fn raw_row(&self, i: usize, lo: usize, row: &mut [f64]) {
        let l = self.spec.len;
        let a = &self.raw[i..i + l];
        for (j, slot) in row.iter_mut().enumerate().skip(lo) {
            let b = &self.raw[j..j + l];
            *slot = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        }
    }

    /// Fills `row[lo..]` with z-normalized distances, maintaining `qt[j]`
    /// as the dot product of windows `i` and `j`.
    fn znorm_row(&self, i: usize, lo: usize, first: bool, qt: &mut [f64], row: &mut [f64]) {
        let l = self.spec.len;
        let c = &self.centered;
        if first {
            let a = &c[i..i + l];
            for j in lo..self.w {
                qt[j] = a.iter().zip(&c[j..j + l]).map(|(x, y)| x * y).sum();
            }
        } else {
            // descending j reads qt[j - 1] before it is overwritten
            let (out_i, in_i) = (c[i - 1], c[i + l - 1]);
            for j in (lo..self.w).rev() {
                qt[j] = qt[j - 1] - out_i * c[j - 1] + in_i * c[j + l - 1];
            }
        }
        if self.degenerate[i] {
            row[lo..].fill(f64::INFINITY);
            return;
        }
        let lf = l as f64;
        let (mu_i, inv_i) = (self.mean[i], self.inv_std[i]);
        for j in lo..self.w {
            row[j] = if self.degenerate[j] {
                f64::INFINITY
            } else {
                let r = ((qt[j] / lf - mu_i * self.mean[j]) * inv_i * self.inv_std[j]).clamp(-1.0, 1.0);
                (2.0 * lf * (1.0 - r)).max(0.0).sqrt()
            };
        }
    }
}
