//! Hit/precision/recall/F1 scoring against a benchmark manifest, the two
//! evaluation protocols, aggregation, and the seeded benchmark suite.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchgen::{generate, GenParams, Manifest, ShapeFamily, ShapeSource};
use crate::chains::{discover, grow_forced, Chain, DiscoveryParams, Method};
use crate::error::{Error, Result};
use crate::numfmt::fmt17;
use crate::profiles::{compute_profiles, ProfileSet};
use crate::ranking::rank;
use crate::series::{DistanceContext, DistanceMode, TimeSeries, WindowSpec};

/// Number of truth nodes (counting back from the last) used as forced
/// starts by the without-ranking protocol.
pub const FORCED_STARTS: usize = 5;

pub const FLAG_EMPTY: &str = "empty chain";
pub const FLAG_NO_CHAIN: &str = "no chain found";
pub const FLAG_NOT_MEANINGFUL: &str = "no meaningful chain";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    WithRanking,
    WithoutRanking,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::WithRanking, Protocol::WithoutRanking];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::WithRanking => "with-ranking",
            Protocol::WithoutRanking => "without-ranking",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank" | "with-ranking" => Ok(Protocol::WithRanking),
            "norank" | "without-ranking" => Ok(Protocol::WithoutRanking),
            other => Err(Error::InvalidParam(format!("unknown protocol `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeMatch {
    pub detected: usize,
    /// Start of the matched truth node, if any.
    pub truth: Option<usize>,
    /// Overlap in samples with the matched truth node.
    pub overlap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalReport {
    pub method: Method,
    pub protocol: Protocol,
    pub hits: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub detected_len: usize,
    pub truth_len: usize,
    /// Detected chain, increasing time order.
    pub nodes: Vec<usize>,
    /// Forced start the chain was grown from (without-ranking only).
    pub start: Option<usize>,
    pub matches: Vec<NodeMatch>,
    pub flags: Vec<String>,
}

fn overlap(a: usize, b: usize, l: usize) -> usize {
    l.saturating_sub(a.abs_diff(b))
}

/// One-to-one greedy matching in increasing time order. A detected node
/// hits a truth node when they overlap by strictly more than half a window.
pub fn match_hits(nodes: &[usize], window_len: usize, manifest: &Manifest) -> Result<(usize, Vec<NodeMatch>)> {
    if window_len != manifest.window_len {
        return Err(Error::WindowMismatch { chain: window_len, manifest: manifest.window_len });
    }
    let l = window_len;
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    let mut used = vec![false; manifest.chain_starts.len()];
    let mut hits = 0;
    let table = sorted
        .into_iter()
        .map(|d| {
            let found = manifest
                .chain_starts
                .iter()
                .enumerate()
                .find(|&(k, &t)| !used[k] && 2 * overlap(d, t, l) > l);
            match found {
                Some((k, &t)) => {
                    used[k] = true;
                    hits += 1;
                    NodeMatch { detected: d, truth: Some(t), overlap: overlap(d, t, l) }
                }
                None => NodeMatch { detected: d, truth: None, overlap: 0 },
            }
        })
        .collect();
    Ok((hits, table))
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn zero_report(method: Method, protocol: Protocol, manifest: &Manifest, flag: &str) -> EvalReport {
    EvalReport {
        method,
        protocol,
        hits: 0,
        recall: 0.0,
        precision: 0.0,
        f1: 0.0,
        detected_len: 0,
        truth_len: manifest.chain_starts.len(),
        nodes: Vec::new(),
        start: None,
        matches: Vec::new(),
        flags: vec![flag.to_string()],
    }
}

pub fn score(
    chain: &Chain,
    window_len: usize,
    manifest: &Manifest,
    method: Method,
    protocol: Protocol,
) -> Result<EvalReport> {
    if chain.is_empty() {
        if window_len != manifest.window_len {
            return Err(Error::WindowMismatch { chain: window_len, manifest: manifest.window_len });
        }
        return Ok(zero_report(method, protocol, manifest, FLAG_EMPTY));
    }
    let (hits, matches) = match_hits(&chain.nodes, window_len, manifest)?;
    let truth_len = manifest.chain_starts.len();
    let recall = if truth_len == 0 { 0.0 } else { hits as f64 / truth_len as f64 };
    let precision = hits as f64 / chain.len() as f64;
    Ok(EvalReport {
        method,
        protocol,
        hits,
        recall,
        precision,
        f1: f1_score(precision, recall),
        detected_len: chain.len(),
        truth_len,
        nodes: chain.nodes.clone(),
        start: None,
        matches,
        flags: Vec::new(),
    })
}

fn check_window(spec: WindowSpec, manifest: &Manifest) -> Result<()> {
    if spec.len != manifest.window_len {
        return Err(Error::WindowMismatch { chain: spec.len, manifest: manifest.window_len });
    }
    Ok(())
}

/// Precomputed state for evaluating several methods on one series.
pub struct Evaluator<'a> {
    ps: ProfileSet,
    ctx: DistanceContext<'a>,
    manifest: &'a Manifest,
    params: DiscoveryParams,
}

impl<'a> Evaluator<'a> {
    pub fn new(ts: &'a TimeSeries, manifest: &'a Manifest, spec: WindowSpec, params: &DiscoveryParams) -> Result<Self> {
        check_window(spec, manifest)?;
        params.validate()?;
        Ok(Self {
            ps: compute_profiles(ts, spec)?,
            ctx: DistanceContext::new(ts, spec)?,
            manifest,
            params: params.clone(),
        })
    }

    pub fn profiles(&self) -> &ProfileSet {
        &self.ps
    }

    /// Scores the top-ranked chain.
    pub fn with_ranking(&self, method: Method) -> Result<EvalReport> {
        let set = discover(method, &self.ps, &self.ctx, &self.params)?;
        let top = rank(&self.ctx, &set.candidates, method, 1);
        let Some(best) = top.first() else {
            return Ok(zero_report(method, Protocol::WithRanking, self.manifest, FLAG_NO_CHAIN));
        };
        let mut report = score(&best.chain, self.ps.spec().len, self.manifest, method, Protocol::WithRanking)?;
        if best.score.eff_len <= 1 {
            report.flags.push(FLAG_NOT_MEANINGFUL.to_string());
        }
        Ok(report)
    }

    /// Reports for chains grown from each of the last [`FORCED_STARTS`]
    /// truth starts, in time order.
    pub fn forced_reports(&self, method: Method) -> Result<Vec<EvalReport>> {
        let starts = &self.manifest.chain_starts;
        starts[starts.len().saturating_sub(FORCED_STARTS)..]
            .iter()
            .map(|&s| {
                let chain = grow_forced(&self.ps, &self.ctx, s, method, &self.params)?;
                let mut report = score(&chain, self.ps.spec().len, self.manifest, method, Protocol::WithoutRanking)?;
                report.start = Some(s);
                Ok(report)
            })
            .collect()
    }

    /// Best F1 among [`Self::forced_reports`], earliest start on ties.
    pub fn without_ranking(&self, method: Method) -> Result<EvalReport> {
        let mut best: Option<EvalReport> = None;
        for report in self.forced_reports(method)? {
            if best.as_ref().is_none_or(|b| report.f1 > b.f1) {
                best = Some(report);
            }
        }
        Ok(best.unwrap_or_else(|| zero_report(method, Protocol::WithoutRanking, self.manifest, FLAG_NO_CHAIN)))
    }

    pub fn run(&self, method: Method, protocol: Protocol) -> Result<EvalReport> {
        match protocol {
            Protocol::WithRanking => self.with_ranking(method),
            Protocol::WithoutRanking => self.without_ranking(method),
        }
    }
}

pub fn eval_with_ranking(
    method: Method,
    ts: &TimeSeries,
    manifest: &Manifest,
    spec: WindowSpec,
    params: &DiscoveryParams,
) -> Result<EvalReport> {
    Evaluator::new(ts, manifest, spec, params)?.with_ranking(method)
}

pub fn eval_without_ranking(
    method: Method,
    ts: &TimeSeries,
    manifest: &Manifest,
    spec: WindowSpec,
    params: &DiscoveryParams,
) -> Result<EvalReport> {
    Evaluator::new(ts, manifest, spec, params)?.without_ranking(method)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryRow {
    pub method: Method,
    pub protocol: Protocol,
    pub count: usize,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub mean_f1: f64,
    pub wins: usize,
}

/// Per-method means and win counts. Each inner slice holds the reports of
/// one benchmark instance; a win goes to the strictly best F1 among the
/// reports sharing a protocol within an instance.
pub fn aggregate(instances: &[Vec<EvalReport>]) -> Result<Vec<SummaryRow>> {
    if instances.iter().all(|r| r.is_empty()) {
        return Err(Error::Empty("no reports to aggregate".into()));
    }
    // (count, recall, precision, f1, wins) per method and protocol
    type Totals = (usize, f64, f64, f64, usize);
    let mut order: Vec<(Method, Protocol)> = Vec::new();
    let mut sums: HashMap<(Method, Protocol), Totals> = HashMap::new();
    for reports in instances {
        for r in reports {
            let key = (r.method, r.protocol);
            let e = sums.entry(key).or_insert_with(|| {
                order.push(key);
                (0, 0.0, 0.0, 0.0, 0)
            });
            e.0 += 1;
            e.1 += r.recall;
            e.2 += r.precision;
            e.3 += r.f1;
        }
        for protocol in Protocol::ALL {
            let group: Vec<&EvalReport> = reports.iter().filter(|r| r.protocol == protocol).collect();
            let Some(top) = group.iter().map(|r| r.f1).reduce(f64::max) else { continue };
            let winners: Vec<&&EvalReport> = group.iter().filter(|r| r.f1 == top).collect();
            if winners.len() == 1 {
                sums.get_mut(&(winners[0].method, protocol)).unwrap().4 += 1;
            }
        }
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let (n, r, p, f, w) = sums[&key];
            let n_f = n as f64;
            SummaryRow {
                method: key.0,
                protocol: key.1,
                count: n,
                mean_recall: r / n_f,
                mean_precision: p / n_f,
                mean_f1: f / n_f,
                wins: w,
            }
        })
        .collect())
}

/// Seeded benchmark suite: every family crossed with every seed.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub families: Vec<ShapeFamily>,
    pub seeds: Vec<u64>,
    /// Template for every instance; `shape` and `seed` are overwritten.
    pub base: GenParams,
    pub mode: DistanceMode,
    pub params: DiscoveryParams,
    pub methods: Vec<Method>,
    pub protocols: Vec<Protocol>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            families: vec![
                ShapeFamily::Sine,
                ShapeFamily::Bump,
                ShapeFamily::Cylinder,
                ShapeFamily::Bell,
                ShapeFamily::TwoPeak,
            ],
            seeds: (1..=5).collect(),
            base: GenParams::default(),
            mode: DistanceMode::Znorm,
            params: DiscoveryParams::default(),
            methods: Method::ALL.to_vec(),
            protocols: Protocol::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceResult {
    pub family: ShapeFamily,
    pub seed: u64,
    pub reports: Vec<EvalReport>,
}

pub fn run_instance(cfg: &SuiteConfig, family: ShapeFamily, seed: u64) -> Result<InstanceResult> {
    let gen = GenParams { shape: ShapeSource::Family(family), seed, ..cfg.base.clone() };
    let (ts, manifest) = generate(&gen)?;
    let spec = WindowSpec::new(gen.window_len, cfg.mode)?;
    let ev = Evaluator::new(&ts, &manifest, spec, &cfg.params)?;
    let mut reports = Vec::new();
    for &protocol in &cfg.protocols {
        for &method in &cfg.methods {
            reports.push(ev.run(method, protocol)?);
        }
    }
    Ok(InstanceResult { family, seed, reports })
}

/// Runs all instances in parallel; results come back in family-major,
/// seed-minor order regardless of scheduling.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<InstanceResult>> {
    let jobs: Vec<(ShapeFamily, u64)> =
        cfg.families.iter().flat_map(|&f| cfg.seeds.iter().map(move |&s| (f, s))).collect();
    jobs.par_iter().map(|&(f, s)| run_instance(cfg, f, s)).collect()
}

/// Table-style CSV: one row per protocol, method and family, plus an
/// `all` row per protocol and method.
pub fn suite_csv(results: &[InstanceResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidParam(format!("csv: {e}"));
    w.write_record(["protocol", "method", "family", "instances", "recall", "precision", "f1", "wins"])
        .map_err(csv_err)?;
    let mut families: Vec<ShapeFamily> = Vec::new();
    for r in results {
        if !families.contains(&r.family) {
            families.push(r.family);
        }
    }
    let mut groups: Vec<(String, Vec<Vec<EvalReport>>)> = families
        .iter()
        .map(|f| {
            let reports = results.iter().filter(|r| r.family == *f).map(|r| r.reports.clone()).collect();
            (f.to_string(), reports)
        })
        .collect();
    groups.push(("all".to_string(), results.iter().map(|r| r.reports.clone()).collect()));

    let mut rows = Vec::new();
    for (family, reports) in &groups {
        for row in aggregate(reports)? {
            rows.push((row.protocol, row.method, family.clone(), row));
        }
    }
    // stable sort keeps family order within a protocol/method block
    rows.sort_by_key(|(p, m, _, _)| (*p as u8, *m as u8));
    for (p, m, family, row) in rows {
        w.write_record([
            p.as_str().to_string(),
            m.as_str().to_string(),
            family,
            row.count.to_string(),
            fmt17(row.mean_recall),
            fmt17(row.mean_precision),
            fmt17(row.mean_f1),
            row.wins.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParam(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::ChainTag;
    use crate::SCHEMA_VERSION;

    fn manifest(starts: Vec<usize>, l: usize) -> Manifest {
        Manifest {
            schema_version: SCHEMA_VERSION.into(),
            window_len: l,
            chain_starts: starts,
            distractor_starts: vec![],
            seed: 0,
            rng: String::new(),
            noise: String::new(),
            params: GenParams::default(),
        }
    }

    fn report(method: Method, f1: f64) -> EvalReport {
        EvalReport {
            method,
            protocol: Protocol::WithRanking,
            hits: 0,
            recall: f1,
            precision: f1,
            f1,
            detected_len: 1,
            truth_len: 1,
            nodes: vec![],
            start: None,
            matches: vec![],
            flags: vec![],
        }
    }

    #[test]
    fn overlap_boundary_is_strict() {
        let m = manifest(vec![100], 10);
        assert_eq!(match_hits(&[100], 10, &m).unwrap().0, 1);
        assert_eq!(match_hits(&[105], 10, &m).unwrap().0, 0);
        assert_eq!(match_hits(&[104], 10, &m).unwrap().0, 1);
        assert_eq!(match_hits(&[99, 101], 10, &m).unwrap().0, 1);
        assert!(matches!(match_hits(&[1], 8, &m), Err(Error::WindowMismatch { .. })));
    }

    #[test]
    fn formula_arithmetic() {
        let starts: Vec<usize> = (0..10).map(|k| k * 100).collect();
        let m = manifest(starts.clone(), 10);
        let mut nodes = starts[..6].to_vec();
        nodes.extend([2050, 3050]);
        let r = score(&Chain::new(ChainTag::Tsc22, nodes), 10, &m, Method::Tsc22, Protocol::WithRanking).unwrap();
        assert_eq!((r.hits, r.detected_len, r.truth_len), (6, 8, 10));
        assert!((r.recall - 0.6).abs() < 1e-12);
        assert!((r.precision - 0.75).abs() < 1e-12);
        assert!((r.f1 - 0.9 / 1.35).abs() < 1e-12);

        assert_eq!(format!("{:.3}", f1_score(0.975, 0.820)), "0.891");
        let r = score(&Chain::new(ChainTag::Tsc22, starts), 10, &m, Method::Tsc22, Protocol::WithRanking).unwrap();
        assert_eq!((r.recall, r.precision, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_chain_report() {
        let m = manifest(vec![0, 50], 10);
        let r = score(&Chain::new(ChainTag::Tsc22, vec![]), 10, &m, Method::Tsc17, Protocol::WithRanking).unwrap();
        assert_eq!((r.hits, r.precision, r.f1), (0, 0.0, 0.0));
        assert_eq!(r.flags, vec![FLAG_EMPTY.to_string()]);
    }

    #[test]
    fn aggregate_rules() {
        let s = aggregate(&[vec![report(Method::Tsc22, 0.4)]]).unwrap();
        assert_eq!((s[0].mean_f1, s[0].wins, s[0].count), (0.4, 1, 1));

        let s = aggregate(&[vec![report(Method::Tsc22, 1.0)], vec![report(Method::Tsc22, 0.5)]]).unwrap();
        assert_eq!(s[0].mean_f1, 0.75);

        let tie = vec![report(Method::Tsc17, 0.7), report(Method::Tsc20, 0.7), report(Method::Tsc22, 0.2)];
        assert!(aggregate(&[tie]).unwrap().iter().all(|r| r.wins == 0));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn protocol_names() {
        assert_eq!("rank".parse::<Protocol>().unwrap(), Protocol::WithRanking);
        assert_eq!("norank".parse::<Protocol>().unwrap(), Protocol::WithoutRanking);
        assert!("maybe".parse::<Protocol>().is_err());
    }
}
