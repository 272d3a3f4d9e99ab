//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tschain::chains::{critical_nodes, discover, DiscoveryParams, Method};
use tschain::evaluation::{aggregate, f1_score, run_suite, Protocol, SuiteConfig, SummaryRow};
use tschain::numfmt::to_json_string;
use tschain::oracle::{geometry_builder, geometry_spec};
use tschain::profiles::compute_profiles;
use tschain::ranking::{rank, rank_baseline, rank_two_stage, score_chain};
use tschain::{Chain, ChainTag, DistanceContext, DistanceMode, TimeSeries, WindowSpec};

const LADDER: [f64; 13] = [40.0, 20.0, 1.0, 23.0, 2.0, 58.0, 3.0, 36.0, 3.3, 34.0, 4.0, 43.0, 5.0];
const FLIPPED: [f64; 13] = [40.0, 20.0, 1.0, 23.0, 2.0, 58.0, 3.3, 36.0, 3.0, 34.0, 4.0, 43.0, 5.0];

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// 0-based positions of `values` in `series`, in time order.
fn positions(series: &[f64], values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = values.iter().map(|v| series.iter().position(|x| x == v).unwrap()).collect();
    idx.sort_unstable();
    idx
}

fn criterion_1() -> Outcome {
    let spec = WindowSpec::raw(1).unwrap();
    let params = DiscoveryParams::default();

    let ts = TimeSeries::new(LADDER.to_vec()).unwrap();
    let ps = compute_profiles(&ts, spec).unwrap();
    let ctx = DistanceContext::new(&ts, spec).unwrap();
    let set = discover(Method::Tsc17, &ps, &ctx, &params).unwrap();
    let top = &rank_baseline(&ctx, &set.candidates, Method::Tsc17, 1)[0].chain.nodes;
    ensure(*top == positions(&LADDER, &[1.0, 2.0, 3.0, 3.3, 4.0, 5.0]), format!("ladder tsc17 top {top:?}"))?;

    let ts = TimeSeries::new(FLIPPED.to_vec()).unwrap();
    let ps = compute_profiles(&ts, spec).unwrap();
    let ctx = DistanceContext::new(&ts, spec).unwrap();
    let set = discover(Method::Tsc17, &ps, &ctx, &params).unwrap();
    let top = &rank_baseline(&ctx, &set.candidates, Method::Tsc17, 1)[0].chain.nodes;
    ensure(*top == positions(&FLIPPED, &[4.0, 5.0]), format!("flipped tsc17 top {top:?}"))?;

    let set = discover(Method::Tsc22, &ps, &ctx, &params).unwrap();
    let top = &rank_two_stage(&ctx, &set.candidates, 1)[0].chain.nodes;
    ensure(*top == positions(&FLIPPED, &[1.0, 2.0, 3.3, 4.0, 5.0]), format!("flipped tsc22 top {top:?}"))?;

    let at = |v: f64| positions(&FLIPPED, &[v])[0];
    let inns20 = ps.inns_of(at(20.0)).unwrap();
    ensure(inns20 == positions(&FLIPPED, &[23.0, 34.0, 5.0]).as_slice(), format!("INNS(20) {inns20:?}"))?;
    let inns33 = ps.inns_of(at(3.3)).unwrap();
    ensure(inns33 == positions(&FLIPPED, &[3.0, 4.0, 5.0]).as_slice(), format!("INNS(3.3) {inns33:?}"))?;

    let crit = critical_nodes(&ps);
    let mut on_chain: Vec<usize> = top.iter().copied().filter(|&i| crit.contains(i)).collect();
    on_chain.sort_unstable();
    ensure(on_chain == positions(&FLIPPED, &[2.0, 4.0, 5.0]), format!("critical on chain {on_chain:?}"))?;
    Ok("worked examples match".into())
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut mismatches = Vec::new();
    for config in 0..common::CONFIGS.len() {
        for trial in 0..common::TRIALS {
            if let Err(e) = common::check_instance(config, trial) {
                mismatches.push(e);
            }
        }
    }
    let elapsed = t.elapsed();
    ensure(mismatches.is_empty(), format!("{} mismatches, first: {}", mismatches.len(), mismatches.first().map_or("", |s| s)))?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} instances x 3 methods, 0 mismatches in {:.1}s (znorm runs l=4,8 only: znorm needs l >= 3)",
        common::CONFIGS.len() as u64 * common::TRIALS,
        elapsed.as_secs_f64()
    ))
}

fn criterion_3() -> Outcome {
    let params = DiscoveryParams::default();
    let mut checked = 0;
    for (config, &(mode, l)) in common::CONFIGS.iter().enumerate() {
        for trial in 0..common::TRIALS {
            let seed = common::seed_for(config, trial);
            let ts = common::random_series(seed, mode);
            let spec = WindowSpec::new(l, mode).unwrap();
            let ps = compute_profiles(&ts, spec).unwrap();
            let ctx = DistanceContext::new(&ts, spec).unwrap();
            let t17 = discover(Method::Tsc17, &ps, &ctx, &params).unwrap();
            let t22 = discover(Method::Tsc22, &ps, &ctx, &params).unwrap();
            let pool: HashSet<&Vec<usize>> = t22.candidates.iter().map(|c| &c.nodes).collect();
            for c in &t17.candidates {
                ensure(pool.contains(&c.nodes), format!("{mode} l={l} seed={seed}: {:?} missing", c.nodes))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} TSC17 chains all present among TSC22 candidates"))
}

fn criterion_4() -> Outcome {
    let spec = geometry_spec();
    let params = DiscoveryParams::default();

    let (ts, starts) = geometry_builder(&common::geometry_zigzag()).unwrap();
    let ps = compute_profiles(&ts, spec).unwrap();
    let ctx = DistanceContext::new(&ts, spec).unwrap();
    let designated: HashSet<usize> = starts.iter().copied().collect();
    let t20 = discover(Method::Tsc20, &ps, &ctx, &params).unwrap();
    let worst = t20.maximal.iter().map(|c| c.nodes.iter().filter(|n| designated.contains(n)).count()).max();
    ensure(worst <= Some(2), format!("tsc20 chain through {worst:?} zig-zag points"))?;
    let t22 = discover(Method::Tsc22, &ps, &ctx, &params).unwrap();
    ensure(
        t22.maximal.iter().any(|c| c.nodes == starts),
        format!("tsc22 maximal chains {:?}", t22.maximal),
    )?;

    let (ts, starts) = geometry_builder(&common::geometry_steady_then_drift()).unwrap();
    let ps = compute_profiles(&ts, spec).unwrap();
    let ctx = DistanceContext::new(&ts, spec).unwrap();
    let steady: HashSet<usize> = starts[..common::STEADY_POINTS].iter().copied().collect();
    let last = *starts.last().unwrap();
    let t20 = discover(Method::Tsc20, &ps, &ctx, &params).unwrap();
    let from_last = t20.maximal.iter().find(|c| c.latest() == Some(last)).ok_or("no tsc20 chain from the last point")?;
    let attached = from_last.nodes.iter().filter(|n| steady.contains(n)).count();
    ensure(attached > 0, "tsc20 chain attaches no steady node")?;
    let t22 = discover(Method::Tsc22, &ps, &ctx, &params).unwrap();
    let top = &rank(&ctx, &t22.candidates, Method::Tsc22, 1)[0].chain;
    ensure(top.nodes.iter().all(|n| !steady.contains(n)), format!("tsc22 top {:?} has steady nodes", top.nodes))?;
    ensure(top.nodes == starts[common::STEADY_POINTS..], format!("tsc22 top {:?}", top.nodes))?;
    Ok(format!("zig-zag: tsc20 breaks, tsc22 recovers all 9; drift: tsc20 attaches {attached} steady nodes, tsc22 top has none"))
}

fn criterion_5() -> Outcome {
    let tol = 1e-8;
    // uniform linear chains
    for m in 2..12 {
        let step = 0.37 * m as f64;
        let ts = TimeSeries::new((0..m).map(|k| 1.5 + step * k as f64).collect()).unwrap();
        let ctx = DistanceContext::new(&ts, WindowSpec::raw(1).unwrap()).unwrap();
        let s = score_chain(&ctx, &Chain::new(ChainTag::Tsc22, (0..m).collect())).unwrap();
        ensure(s.eff_len == m as u64 - 1 && (s.eff_raw - (m - 1) as f64).abs() < tol, format!("linear m={m}: {s:?}"))?;
    }
    // identical nodes
    let pattern = [0.3, -1.2, 2.5, 0.7, -0.4];
    for m in 2..8 {
        let v: Vec<f64> = (0..m).flat_map(|k| pattern.iter().map(move |p| p * (1.0 + k as f64) + k as f64)).collect();
        let ts = TimeSeries::new(v).unwrap();
        let ctx = DistanceContext::new(&ts, WindowSpec::znorm(5).unwrap()).unwrap();
        let s = score_chain(&ctx, &Chain::new(ChainTag::Tsc22, (0..m).map(|k| 5 * k).collect())).unwrap();
        ensure((s.corr_len - (m - 1) as f64).abs() < tol, format!("identical m={m}: corrLen {}", s.corr_len))?;
    }
    // triangle bound and affine invariance on random chains
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..300 {
        let n = rng.gen_range(40..200);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mode = if trial % 2 == 0 { DistanceMode::Raw } else { DistanceMode::Znorm };
        let l = rng.gen_range(3..9);
        let spec = WindowSpec::new(l, mode).unwrap();
        let w = n - l + 1;
        let m = rng.gen_range(2..8.min(w / spec.exclusion));
        let mut nodes: Vec<usize> = Vec::new();
        let mut next = rng.gen_range(0..spec.exclusion);
        while nodes.len() < m && next < w {
            nodes.push(next);
            next += spec.exclusion + rng.gen_range(0..4);
        }
        if nodes.len() < 2 {
            continue;
        }
        let chain = Chain::new(ChainTag::Tsc22, nodes);
        let ts = TimeSeries::new(v.clone()).unwrap();
        let ctx = DistanceContext::new(&ts, spec).unwrap();
        let s = score_chain(&ctx, &chain).unwrap();
        ensure(s.eff_len < chain.len() as u64, format!("trial {trial}: effLen {} > m-1", s.eff_len))?;
        if mode == DistanceMode::Znorm {
            let (a, b) = (rng.gen_range(0.1..50.0), rng.gen_range(-100.0..100.0));
            let scaled = TimeSeries::new(v.iter().map(|x| a * x + b).collect()).unwrap();
            let ctx2 = DistanceContext::new(&scaled, spec).unwrap();
            let s2 = score_chain(&ctx2, &chain).unwrap();
            ensure(
                (s.eff_raw - s2.eff_raw).abs() < tol && (s.corr_len - s2.corr_len).abs() < tol && s.eff_len == s2.eff_len,
                format!("trial {trial}: affine change {s:?} vs {s2:?}"),
            )?;
        }
    }
    Ok("linear effLen = m-1, identical corrLen = m-1, effLen <= m-1, affine invariance".into())
}

fn mean_f1(rows: &[SummaryRow], method: Method, protocol: Protocol) -> f64 {
    rows.iter().find(|r| r.method == method && r.protocol == protocol).unwrap().mean_f1
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let results = run_suite(&SuiteConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let all: Vec<_> = results.iter().map(|r| r.reports.clone()).collect();
    let rows = aggregate(&all).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    let mut ok = elapsed < Duration::from_secs(300);
    for protocol in Protocol::ALL {
        let [f17, f20, f22] = Method::ALL.map(|m| mean_f1(&rows, m, protocol));
        detail.push(format!("{protocol}: tsc22 {f22:.3} tsc20 {f20:.3} tsc17 {f17:.3}"));
        ok &= f22 > f20 && f20 > f17;
        if protocol == Protocol::WithRanking {
            ok &= f22 >= 0.6;
        }
    }
    let msg = format!("{} ({:.0}s)", detail.join("; "), elapsed.as_secs_f64());
    if ok {
        Ok(msg)
    } else {
        Err(format!("expected tsc22 > tsc20 > tsc17 and tsc22 >= 0.6 with ranking; got {msg}"))
    }
}

fn criterion_7() -> Outcome {
    let f1 = f1_score(0.975, 0.820);
    let shown = format!("{f1:.3}");
    ensure(shown == "0.889", format!("F1(p=0.975, r=0.820) = {f1:.6} rounds to {shown}, expected 0.889"))?;
    Ok(format!("F1 = {shown}"))
}

fn profile_bytes(ts: &TimeSeries, spec: WindowSpec, threads: usize) -> (String, Duration) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let t = Instant::now();
    let ps = pool.install(|| compute_profiles(ts, spec)).unwrap();
    let elapsed = t.elapsed();
    let doc = (ps.left_dist(), ps.left_idx(), ps.right_dist(), ps.right_idx(), ps.inns_table());
    (to_json_string(&doc).unwrap(), elapsed)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut acc = 0.0;
    let v: Vec<f64> = (0..20_000)
        .map(|i| {
            acc += rng.gen_range(-1.0..1.0);
            acc + (i as f64 * 0.05).sin()
        })
        .collect();
    let ts = TimeSeries::new(v).unwrap();
    let spec = WindowSpec::znorm(100).unwrap();
    let (one, t1) = profile_bytes(&ts, spec, 1);
    ensure(t1 < Duration::from_secs(60), format!("single-threaded run took {t1:?}"))?;
    let (four, t4) = profile_bytes(&ts, spec, 4);
    ensure(one == four, "output bytes differ between 1 and 4 threads")?;
    Ok(format!("n=20000 l=100: 1 thread {:.2}s, 4 threads {:.2}s, identical bytes", t1.as_secs_f64(), t4.as_secs_f64()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("worked-example regression", criterion_1),
        ("oracle equivalence", criterion_2),
        ("TSC17 containment", criterion_3),
        ("geometric regressions", criterion_4),
        ("ranking invariants", criterion_5),
        ("benchmark directional reproduction", criterion_6),
        ("metric formula check", criterion_7),
        ("performance sanity", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {msg}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
