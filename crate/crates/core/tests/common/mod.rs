#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tschain::chains::{discover, ChainSet, DiscoveryParams, Method};
use tschain::oracle::{brute_chains, brute_profiles};
use tschain::profiles::compute_profiles;
use tschain::{DistanceContext, DistanceMode, ProfileSet, TimeSeries, WindowSpec};

pub const TRIALS: u64 = 200;

/// (mode, window length) pairs exercised by the equivalence suites.
pub const CONFIGS: [(DistanceMode, usize); 5] = [
    (DistanceMode::Raw, 1),
    (DistanceMode::Raw, 4),
    (DistanceMode::Raw, 8),
    (DistanceMode::Znorm, 4),
    (DistanceMode::Znorm, 8),
];

pub fn seed_for(config: usize, trial: u64) -> u64 {
    1_000_003 * config as u64 + trial
}

/// Random series of 16..=64 samples. Raw configurations also get
/// small-integer series so that exact distance ties occur.
pub fn random_series(seed: u64, mode: DistanceMode) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(16..=64);
    let kind = if mode == DistanceMode::Raw { seed % 3 } else { seed % 2 };
    let values = match kind {
        0 => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        1 => {
            let mut acc = 0.0;
            (0..n)
                .map(|_| {
                    acc += rng.gen_range(-1.0..1.0);
                    acc
                })
                .collect()
        }
        _ => (0..n).map(|_| rng.gen_range(0..4) as f64).collect(),
    };
    TimeSeries::new(values).unwrap()
}

/// Indices and INNS must agree exactly; distances exactly in raw mode and
/// within `1e-9` in znorm mode.
pub fn profiles_match(fast: &ProfileSet, slow: &ProfileSet) -> Result<(), String> {
    if fast.left_idx() != slow.left_idx() {
        return Err(format!("LNN differ: {:?} vs {:?}", fast.left_idx(), slow.left_idx()));
    }
    if fast.right_idx() != slow.right_idx() {
        return Err(format!("RNN differ: {:?} vs {:?}", fast.right_idx(), slow.right_idx()));
    }
    if fast.inns_table() != slow.inns_table() {
        return Err("INNS differ".into());
    }
    let exact = fast.spec().mode == DistanceMode::Raw;
    for (a, b) in fast.left_dist().iter().zip(slow.left_dist()).chain(fast.right_dist().iter().zip(slow.right_dist())) {
        let ok = if exact || !a.is_finite() { a == b } else { (a - b).abs() <= 1e-9 };
        if !ok {
            return Err(format!("distance differs: {a} vs {b}"));
        }
    }
    Ok(())
}

pub fn chains_match(fast: &ChainSet, slow: &ChainSet) -> Result<(), String> {
    if fast.maximal != slow.maximal {
        return Err(format!("maximal differ: {:?} vs {:?}", fast.maximal, slow.maximal));
    }
    if fast.candidates != slow.candidates {
        return Err(format!(
            "candidates differ ({} vs {})",
            fast.candidates.len(),
            slow.candidates.len()
        ));
    }
    Ok(())
}

/// Runs one trial of the equivalence check.
pub fn check_instance(config: usize, trial: u64) -> Result<(), String> {
    let (mode, l) = CONFIGS[config];
    let seed = seed_for(config, trial);
    let ts = random_series(seed, mode);
    let spec = WindowSpec::new(l, mode).unwrap();
    let tag = |e: String| format!("{mode} l={l} seed={seed}: {e}");

    let fast = compute_profiles(&ts, spec).unwrap();
    let slow = brute_profiles(&ts, spec).unwrap();
    profiles_match(&fast, &slow).map_err(tag)?;

    let ctx = DistanceContext::new(&ts, spec).unwrap();
    let params = DiscoveryParams::default();
    for method in Method::ALL {
        let a = discover(method, &fast, &ctx, &params).unwrap();
        let b = brute_chains(&ts, spec, method, &params).unwrap();
        chains_match(&a, &b).map_err(|e| tag(format!("{method}: {e}")))?;
    }
    Ok(())
}

pub fn geometry_zigzag() -> Vec<(f64, f64)> {
    // time order: earliest first; the last point is the anchor
    let a = 0.5;
    let mut pts: Vec<(f64, f64)> = (2..=9)
        .rev()
        .map(|k| (-((k - 1) as f64), if k % 2 == 1 { a } else { -a }))
        .collect();
    // on the circle over the last two zig-zag points, so the first angle is 90 degrees
    let (s2, s3) = (pts[7], pts[6]);
    let centre = ((s2.0 + s3.0) / 2.0, (s2.1 + s3.1) / 2.0);
    let radius = ((s2.0 - s3.0).hypot(s2.1 - s3.1)) / 2.0;
    pts.push((centre.0 + radius, centre.1));
    pts
}

pub fn geometry_steady_then_drift() -> Vec<(f64, f64)> {
    // jittered cluster whose member nearest the drift is not its latest one
    let mut pts = vec![(0.0, 0.02), (0.01, -0.02), (-0.01, 0.0), (0.05, 0.0), (-0.02, 0.03), (0.0, -0.03)];
    pts.extend((2..=7).map(|x| (x as f64, 0.0)));
    pts
}

/// Number of leading steady points in [`geometry_steady_then_drift`].
pub const STEADY_POINTS: usize = 6;
