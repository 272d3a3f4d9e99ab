use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tschain::benchgen::{generate, GenParams, Manifest, ShapeSource};
use tschain::chains::{discover as discover_chains, Chain, DiscoveryParams, Method};
use tschain::evaluation::{aggregate, run_suite, suite_csv, EvalReport, Evaluator, SuiteConfig};
use tschain::numfmt::{fmt17, to_json_string};
use tschain::oracle::{brute_chains, brute_profiles};
use tschain::profiles::{compute_profiles_with, ProfileOptions};
use tschain::ranking::{rank as rank_chains, ChainScore};
use tschain::series::{load_series, InputFormat};
use tschain::{DistanceContext, DistanceMode, ProfileSet, TimeSeries, WindowSpec, SCHEMA_VERSION};

use crate::args::{
    BenchArgs, DiscoverArgs, EvalArgs, InputArgs, ProfilesArgs, RankArgs, SynthArgs, VerifyArgs, WindowArgs,
};

/// Failure outside the library's own error kinds.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn fail(kind: &'static str, message: impl Into<String>) -> anyhow::Error {
    Failure { kind, message: message.into() }.into()
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn read_series(path: &Path, column: Option<&str>) -> anyhow::Result<TimeSeries> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let format = if column.is_some() || is_csv {
        InputFormat::Csv { column: column.map(str::to_owned) }
    } else {
        InputFormat::Plain
    };
    let ts = if path == Path::new("-") {
        load_series(io::stdin().lock(), &format)
    } else {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        load_series(file, &format)
    };
    ts.with_context(|| format!("reading {}", path.display()))
}

fn load_input(input: &InputArgs) -> anyhow::Result<TimeSeries> {
    read_series(&input.input, input.column.as_deref())
}

fn window_spec(w: &WindowArgs) -> anyhow::Result<WindowSpec> {
    let spec = match w.exclusion {
        Some(e) => WindowSpec::with_exclusion(w.window, w.mode, e)?,
        None => WindowSpec::new(w.window, w.mode)?,
    };
    Ok(spec)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Wraps a document with the output schema version.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Versioned<T> {
    schema_version: &'static str,
    #[serde(flatten)]
    body: T,
}

fn versioned<T>(body: T) -> Versioned<T> {
    Versioned { schema_version: SCHEMA_VERSION, body }
}

fn blank_if_inf(v: f64) -> String {
    if v.is_finite() {
        fmt17(v)
    } else {
        String::new()
    }
}

fn opt_index(i: Option<usize>) -> String {
    i.map(|v| v.to_string()).unwrap_or_default()
}

fn profile_csv(ps: &ProfileSet) -> String {
    let mut out = String::from("index,leftDist,leftIdx,rightDist,rightIdx\n");
    for i in 0..ps.window_count() {
        out.push_str(&format!(
            "{i},{},{},{},{}\n",
            blank_if_inf(ps.left_dist()[i]),
            opt_index(ps.left_idx()[i]),
            blank_if_inf(ps.right_dist()[i]),
            opt_index(ps.right_idx()[i]),
        ));
    }
    out
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct InnsDoc<'a> {
    window: usize,
    mode: DistanceMode,
    exclusion: usize,
    /// Keyed by window index.
    inns: std::collections::BTreeMap<String, &'a [usize]>,
}

pub fn profiles(a: ProfilesArgs) -> anyhow::Result<()> {
    let spec = window_spec(&a.window)?;
    let ts = load_input(&a.input)?;
    let ps = compute_profiles_with(&ts, spec, &ProfileOptions { max_inns_total: a.max_inns })?;
    if let Some(path) = &a.inns {
        let doc = InnsDoc {
            window: spec.len,
            mode: spec.mode,
            exclusion: spec.exclusion,
            inns: ps.inns_table().iter().enumerate().map(|(i, v)| (i.to_string(), v.as_slice())).collect(),
        };
        emit(Some(path), &to_json_string(&versioned(doc))?)?;
    }
    emit(a.out.as_deref(), &profile_csv(&ps))
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ParamsDoc {
    angle: f64,
    max_candidates: usize,
}

#[derive(Serialize, Deserialize)]
struct ChainDoc {
    nodes: Vec<usize>,
    scores: Option<ChainScore>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DiscoveryDoc {
    method: Method,
    window: usize,
    mode: DistanceMode,
    exclusion: usize,
    params: ParamsDoc,
    candidate_count: usize,
    truncated: bool,
    chains: Vec<ChainDoc>,
}

/// Discovery JSON as read back by `rank`; tolerates the version field.
#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DiscoveryInput {
    schema_version: String,
    #[serde(flatten)]
    doc: DiscoveryDoc,
}

fn ranked_docs(ctx: &DistanceContext<'_>, chains: &[Chain], method: Method, topk: usize) -> Vec<ChainDoc> {
    rank_chains(ctx, chains, method, topk)
        .into_iter()
        .map(|r| ChainDoc { nodes: r.chain.nodes, scores: Some(r.score) })
        .collect()
}

pub fn discover(a: DiscoverArgs) -> anyhow::Result<()> {
    let spec = window_spec(&a.window)?;
    let params = DiscoveryParams { angle: a.angle, max_candidates: a.max_candidates };
    params.validate()?;
    let ts = load_input(&a.input)?;
    let ps = compute_profiles_with(&ts, spec, &ProfileOptions::default())?;
    let ctx = DistanceContext::new(&ts, spec)?;
    let set = discover_chains(a.method, &ps, &ctx, &params)?;
    let chains = if a.no_rank {
        set.candidates.iter().map(|c| ChainDoc { nodes: c.nodes.clone(), scores: None }).collect()
    } else {
        ranked_docs(&ctx, &set.candidates, a.method, a.topk)
    };
    let doc = DiscoveryDoc {
        method: a.method,
        window: spec.len,
        mode: spec.mode,
        exclusion: spec.exclusion,
        params: ParamsDoc { angle: params.angle, max_candidates: params.max_candidates },
        candidate_count: set.candidates.len(),
        truncated: set.truncated,
        chains,
    };
    emit(a.out.as_deref(), &to_json_string(&versioned(doc))?)
}

pub fn rank(a: RankArgs) -> anyhow::Result<()> {
    let input: DiscoveryInput = read_json(&a.chains)?;
    if input.schema_version != SCHEMA_VERSION {
        return Err(fail(
            "schema",
            format!("unsupported schemaVersion `{}` (expected `{SCHEMA_VERSION}`)", input.schema_version),
        ));
    }
    let mut doc = input.doc;
    let spec = WindowSpec::with_exclusion(doc.window, doc.mode, doc.exclusion)?;
    let ts = load_input(&a.input)?;
    let ctx = DistanceContext::new(&ts, spec)?;
    let w = ctx.window_count();
    let mut chains = Vec::with_capacity(doc.chains.len());
    for (k, c) in doc.chains.iter().enumerate() {
        if let Some(&bad) = c.nodes.iter().find(|&&n| n >= w) {
            return Err(tschain::Error::IndexOutOfRange { index: bad, windows: w })
                .with_context(|| format!("chain {k}"));
        }
        if c.nodes.windows(2).any(|p| p[0] >= p[1]) {
            return Err(fail("invalid-chain", format!("chain {k}: nodes must be strictly increasing")));
        }
        chains.push(Chain::new(doc.method.tag(), c.nodes.clone()));
    }
    doc.chains = ranked_docs(&ctx, &chains, doc.method, a.topk);
    emit(a.out.as_deref(), &to_json_string(&versioned(doc))?)
}

fn series_csv(ts: &TimeSeries) -> String {
    let mut out = String::with_capacity(ts.len() * 24 + 6);
    out.push_str("value\n");
    for v in ts.values() {
        out.push_str(&fmt17(*v));
        out.push('\n');
    }
    out
}

pub fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let shape = match &a.ucr {
        Some(path) => ShapeSource::Ucr { path: path.to_string_lossy().into_owned(), class: a.class },
        None => ShapeSource::Family(a.shape),
    };
    let params = GenParams {
        node_count: a.nodes,
        window_len: a.window,
        core_pad_len: a.core,
        head_pad_len: a.head,
        tail_pad_len: a.tail,
        noise_amp: a.noise,
        background_amp: a.background,
        distractor_count: a.distractors,
        shape,
        seed: a.seed,
    };
    let (ts, manifest) = generate(&params)?;
    emit(Some(&a.out), &series_csv(&ts))?;
    emit(Some(&a.manifest), &to_json_string(&manifest)?)
}

pub fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let manifest: Manifest = read_json(&a.manifest)?;
    let ts = read_series(&a.series, None)?;
    let spec = WindowSpec::new(manifest.window_len, a.mode)?;
    let params = DiscoveryParams { angle: a.angle, ..DiscoveryParams::default() };
    let ev = Evaluator::new(&ts, &manifest, spec, &params)?;
    let report = ev.run(a.method, a.protocol)?;
    emit(a.out.as_deref(), &to_json_string(&versioned(report))?)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BenchReport<'a> {
    instances: &'a [tschain::evaluation::InstanceResult],
    summary: Vec<tschain::evaluation::SummaryRow>,
}

pub fn bench(a: BenchArgs) -> anyhow::Result<()> {
    let base = GenParams {
        node_count: a.nodes,
        window_len: a.window,
        core_pad_len: a.core,
        head_pad_len: a.head,
        tail_pad_len: a.tail,
        noise_amp: a.noise,
        background_amp: a.background,
        distractor_count: a.distractors,
        ..GenParams::default()
    };
    base.validate()?;
    let cfg = SuiteConfig {
        families: a.families,
        seeds: a.seeds,
        base,
        mode: a.mode,
        params: DiscoveryParams { angle: a.angle, ..DiscoveryParams::default() },
        methods: a.methods,
        ..SuiteConfig::default()
    };
    cfg.params.validate()?;
    let results = run_suite(&cfg)?;
    if let Some(path) = &a.reports {
        let per_instance: Vec<Vec<EvalReport>> = results.iter().map(|r| r.reports.clone()).collect();
        let doc = BenchReport { instances: &results, summary: aggregate(&per_instance)? };
        emit(Some(path), &to_json_string(&versioned(doc))?)?;
    }
    emit(a.out.as_deref(), &suite_csv(&results)?)
}

/// (mode, window length) pairs checked by `verify`.
const VERIFY_CONFIGS: [(DistanceMode, usize); 5] = [
    (DistanceMode::Raw, 1),
    (DistanceMode::Raw, 4),
    (DistanceMode::Raw, 8),
    (DistanceMode::Znorm, 4),
    (DistanceMode::Znorm, 8),
];

/// Random-walk series; raw configurations alternate with small integers so
/// that exact distance ties occur.
fn verify_series(rng: &mut ChaCha8Rng, n: usize, mode: DistanceMode, trial: u64) -> TimeSeries {
    let values = if mode == DistanceMode::Raw && trial % 2 == 1 {
        (0..n).map(|_| rng.gen_range(0..4) as f64).collect()
    } else {
        let mut acc = 0.0;
        (0..n)
            .map(|_| {
                acc += rng.gen_range(-1.0..1.0);
                acc
            })
            .collect()
    };
    TimeSeries::new(values).expect("finite values")
}

fn profiles_agree(fast: &ProfileSet, slow: &ProfileSet) -> bool {
    let exact = fast.spec().mode == DistanceMode::Raw;
    let close = |a: &f64, b: &f64| if exact || !a.is_finite() { a == b } else { (a - b).abs() <= 1e-9 };
    fast.left_idx() == slow.left_idx()
        && fast.right_idx() == slow.right_idx()
        && fast.inns_table() == slow.inns_table()
        && fast.left_dist().iter().zip(slow.left_dist()).all(|(a, b)| close(a, b))
        && fast.right_dist().iter().zip(slow.right_dist()).all(|(a, b)| close(a, b))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyRow {
    mode: DistanceMode,
    window: usize,
    trials: u64,
    profile_mismatches: Vec<u64>,
    chain_mismatches: Vec<u64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyDoc {
    n: usize,
    seed: u64,
    passed: bool,
    configs: Vec<VerifyRow>,
}

pub fn verify(a: VerifyArgs) -> anyhow::Result<()> {
    let max_l = VERIFY_CONFIGS.iter().map(|c| c.1).max().unwrap_or(1);
    if a.n < 2 * max_l {
        return Err(fail("invalid-param", format!("--n must be at least {}", 2 * max_l)));
    }
    let params = DiscoveryParams::default();
    let mut rows = Vec::new();
    for (k, &(mode, l)) in VERIFY_CONFIGS.iter().enumerate() {
        let spec = WindowSpec::new(l, mode)?;
        let mut row = VerifyRow { mode, window: l, trials: a.trials, profile_mismatches: vec![], chain_mismatches: vec![] };
        for trial in 0..a.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            rng.set_stream(k as u64 * 1_000_003 + trial);
            let ts = verify_series(&mut rng, a.n, mode, trial);
            let fast = compute_profiles_with(&ts, spec, &ProfileOptions::default())?;
            let slow = brute_profiles(&ts, spec)?;
            if !profiles_agree(&fast, &slow) {
                row.profile_mismatches.push(trial);
                continue;
            }
            let ctx = DistanceContext::new(&ts, spec)?;
            for method in Method::ALL {
                let x = discover_chains(method, &fast, &ctx, &params)?;
                let y = brute_chains(&ts, spec, method, &params)?;
                if x.maximal != y.maximal || x.candidates != y.candidates {
                    row.chain_mismatches.push(trial);
                    break;
                }
            }
        }
        rows.push(row);
    }
    let passed = rows.iter().all(|r| r.profile_mismatches.is_empty() && r.chain_mismatches.is_empty());
    let doc = VerifyDoc { n: a.n, seed: a.seed, passed, configs: rows };
    emit(a.out.as_deref(), &to_json_string(&versioned(doc))?)?;
    if !passed {
        return Err(fail("verify-mismatch", "optimized and brute-force results differ"));
    }
    Ok(())
}
