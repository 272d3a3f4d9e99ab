//! Seeded synthetic benchmarks with an embedded evolving chain.
//!
//! A benchmark series is `head pad | core | tail pad`. The core is uniform
//! background noise with `nodeCount` chain nodes and `distractorCount`
//! distractor patterns written into non-overlapping slots, then uniform
//! additive noise on top. Chain node `k` interpolates linearly between a
//! start pattern `P` and a random walk `RW`.
//!
//! Randomness comes from ChaCha8 seeded with [`rand::SeedableRng::seed_from_u64`];
//! each role draws from its own stream (see [`RNG_DESCRIPTION`]), so
//! changing e.g. the placement logic never perturbs the shapes.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{TimeSeries, DEGENERATE_SIGMA};
use crate::SCHEMA_VERSION;

const STREAM_SHAPE: u64 = 0;
const STREAM_WALK: u64 = 1;
const STREAM_PLACEMENT: u64 = 2;
const STREAM_NOISE: u64 = 3;

pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng (rand_chacha 0.3) seed_from_u64(seed); streams: shape=0, walk=1, placement=2, noise=3";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeFamily {
    Sine,
    Bump,
    Cylinder,
    Bell,
    Funnel,
    TwoPeak,
}

impl ShapeFamily {
    pub const ALL: [ShapeFamily; 6] = [
        ShapeFamily::Sine,
        ShapeFamily::Bump,
        ShapeFamily::Cylinder,
        ShapeFamily::Bell,
        ShapeFamily::Funnel,
        ShapeFamily::TwoPeak,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ShapeFamily::Sine => "sine",
            ShapeFamily::Bump => "bump",
            ShapeFamily::Cylinder => "cylinder",
            ShapeFamily::Bell => "bell",
            ShapeFamily::Funnel => "funnel",
            ShapeFamily::TwoPeak => "two-peak",
        }
    }
}

impl FromStr for ShapeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

impl std::fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ShapeSource {
    Family(ShapeFamily),
    /// UCR-format file; `class` restricts sampling to one label, otherwise
    /// the class of a random instance is used.
    Ucr { path: String, class: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenParams {
    pub node_count: usize,
    pub window_len: usize,
    pub core_pad_len: usize,
    pub head_pad_len: usize,
    pub tail_pad_len: usize,
    /// Additive noise amplitude relative to the (unit) pattern scale.
    pub noise_amp: f64,
    /// Amplitude of the uniform background noise in the core and pads.
    pub background_amp: f64,
    pub distractor_count: usize,
    pub shape: ShapeSource,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            node_count: 10,
            window_len: 100,
            core_pad_len: 8000,
            head_pad_len: 4000,
            tail_pad_len: 4000,
            noise_amp: 0.1,
            background_amp: 1.0,
            distractor_count: 10,
            shape: ShapeSource::Family(ShapeFamily::Sine),
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::InvalidParam("nodeCount must be at least 2".into()));
        }
        if self.window_len < 3 {
            return Err(Error::InvalidParam("windowLen must be at least 3".into()));
        }
        if self.core_pad_len == 0 || self.head_pad_len == 0 || self.tail_pad_len == 0 {
            return Err(Error::InvalidParam("pad lengths must be positive".into()));
        }
        for (name, v) in [("noiseAmp", self.noise_amp), ("backgroundAmp", self.background_amp)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParam(format!("{name} must be finite and non-negative")));
            }
        }
        let need = (self.node_count + self.distractor_count) * self.window_len;
        if self.core_pad_len < need {
            return Err(Error::CoreTooShort(format!(
                "{} patterns of length {} need {} samples, core has {}",
                self.node_count + self.distractor_count,
                self.window_len,
                need,
                self.core_pad_len
            )));
        }
        Ok(())
    }
}

/// Ground truth for a generated series. Positions are 0-based sample
/// indices into the full series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub schema_version: String,
    pub window_len: usize,
    pub chain_starts: Vec<usize>,
    pub distractor_starts: Vec<usize>,
    pub seed: u64,
    pub rng: String,
    pub noise: String,
    pub params: GenParams,
}

/// Generator output including the clean (pre-noise) buffers.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub series: TimeSeries,
    pub manifest: Manifest,
    /// Z-normalized start pattern.
    pub pattern: Vec<f64>,
    /// Z-normalized random walk.
    pub walk: Vec<f64>,
    /// Chain nodes before noise, in time order.
    pub clean_nodes: Vec<Vec<f64>>,
    pub clean_distractors: Vec<Vec<f64>>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn znormalize(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd < DEGENERATE_SIGMA {
        return None;
    }
    Some(v.iter().map(|x| (x - mean) / sd).collect())
}

/// Draws one pattern of length `l` from a built-in family.
pub fn sample_shape<R: Rng + ?Sized>(family: ShapeFamily, l: usize, rng: &mut R) -> Vec<f64> {
    let t = |k: usize| k as f64 / l as f64;
    match family {
        ShapeFamily::Sine => {
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = rng.gen_range(0.5..1.5);
            (0..l).map(|k| amp * (std::f64::consts::TAU * t(k) + phase).sin()).collect()
        }
        ShapeFamily::Bump => {
            let a = rng.gen_range(0.15..0.35);
            let b = rng.gen_range(0.65..0.85);
            let sharp = rng.gen_range(40.0..80.0);
            (0..l)
                .map(|k| {
                    let x = t(k);
                    0.5 * ((sharp * (x - a)).tanh() - (sharp * (x - b)).tanh())
                })
                .collect()
        }
        ShapeFamily::Cylinder | ShapeFamily::Funnel => {
            let a = rng.gen_range(0.125..0.25);
            let b = a + rng.gen_range(0.25..0.75);
            let h = 6.0 + rng.gen_range(-1.0..1.0);
            (0..l)
                .map(|k| {
                    let x = t(k);
                    if x < a || x > b {
                        0.0
                    } else if family == ShapeFamily::Cylinder {
                        h
                    } else {
                        h * (b - x) / (b - a)
                    }
                })
                .collect()
        }
        ShapeFamily::Bell => {
            // linear rise from a to b, plateau afterwards
            let a = rng.gen_range(0.05..0.3);
            let b = rng.gen_range(0.7..0.9);
            let h = 6.0 + rng.gen_range(-1.0..1.0);
            (0..l)
                .map(|k| {
                    let x = t(k);
                    if x < a {
                        0.0
                    } else if x < b {
                        h * (x - a) / (b - a)
                    } else {
                        h
                    }
                })
                .collect()
        }
        ShapeFamily::TwoPeak => {
            let c1 = rng.gen_range(0.2..0.4);
            let c2 = rng.gen_range(0.6..0.8);
            let w1 = rng.gen_range(0.04..0.08);
            let w2 = rng.gen_range(0.04..0.08);
            let h2 = rng.gen_range(0.6..1.4);
            (0..l)
                .map(|k| {
                    let x = t(k);
                    (-((x - c1) / w1).powi(2)).exp() + h2 * (-((x - c2) / w2).powi(2)).exp()
                })
                .collect()
        }
    }
}

/// Linear interpolation of `v` onto `l` evenly spaced points.
pub fn resample(v: &[f64], l: usize) -> Vec<f64> {
    if v.len() == 1 || l == 1 {
        return vec![v[0]; l];
    }
    let scale = (v.len() - 1) as f64 / (l - 1) as f64;
    (0..l)
        .map(|k| {
            let pos = k as f64 * scale;
            let lo = (pos.floor() as usize).min(v.len() - 2);
            let frac = pos - lo as f64;
            v[lo] + (v[lo + 1] - v[lo]) * frac
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct UcrInstance {
    pub label: f64,
    pub values: Vec<f64>,
}

/// Parses UCR text layout: one instance per line, label first, values
/// separated by whitespace and/or commas. Blank lines are skipped.
pub fn load_ucr_reader<R: Read>(reader: R) -> Result<Vec<UcrInstance>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let mut tokens = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty());
        let Some(first) = tokens.next() else { continue };
        let parse = |tok: &str| -> Result<f64> {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse { line: line_no, message: format!("bad value `{tok}`") }),
            }
        };
        let label = parse(first)?;
        let values = tokens.map(parse).collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Parse { line: line_no, message: "instance has no values".into() });
        }
        out.push(UcrInstance { label, values });
    }
    Ok(out)
}

pub fn load_ucr(path: impl AsRef<Path>) -> Result<Vec<UcrInstance>> {
    load_ucr_reader(File::open(path)?)
}

/// Draws the start pattern and the distractors, all z-normalized.
fn draw_shapes(params: &GenParams, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let l = params.window_len;
    let flat = || Error::InvalidParam("sampled pattern is constant".into());
    match &params.shape {
        ShapeSource::Family(f) => {
            let p = znormalize(&sample_shape(*f, l, rng)).ok_or_else(flat)?;
            let ds = (0..params.distractor_count)
                .map(|_| znormalize(&sample_shape(*f, l, rng)).ok_or_else(flat))
                .collect::<Result<Vec<_>>>()?;
            Ok((p, ds))
        }
        ShapeSource::Ucr { path, class } => {
            let all = load_ucr(path)?;
            if all.is_empty() {
                return Err(Error::Empty(format!("no instances in {path}")));
            }
            let label = match class {
                Some(c) => *c,
                None => all[rng.gen_range(0..all.len())].label,
            };
            let pool: Vec<&UcrInstance> = all.iter().filter(|i| i.label == label).collect();
            if pool.is_empty() {
                return Err(Error::InvalidParam(format!("no instances with class {label}")));
            }
            let pick = rng.gen_range(0..pool.len());
            let p = znormalize(&resample(&pool[pick].values, l)).ok_or_else(flat)?;
            let ds = (0..params.distractor_count)
                .map(|_| {
                    let mut k = rng.gen_range(0..pool.len());
                    if pool.len() > 1 && k == pick {
                        k = (k + 1) % pool.len();
                    }
                    znormalize(&resample(&pool[k].values, l)).ok_or_else(flat)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((p, ds))
        }
    }
}

fn random_walk(l: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut acc = 0.0;
        let walk: Vec<f64> = (0..l)
            .map(|_| {
                acc += rng.gen_range(-1.0..1.0);
                acc
            })
            .collect();
        if let Some(z) = znormalize(&walk) {
            return z;
        }
    }
}

/// Slot starts (relative to the core) for `k` patterns of length `l`.
fn place(k: usize, l: usize, core: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let free = core - k * l;
    let mut offsets: Vec<usize> = (0..k).map(|_| rng.gen_range(0..=free)).collect();
    offsets.sort_unstable();
    offsets.iter().enumerate().map(|(i, o)| o + i * l).collect()
}

pub fn generate_detailed(params: &GenParams) -> Result<Benchmark> {
    params.validate()?;
    let l = params.window_len;
    let m = params.node_count;

    let (pattern, distractors) = draw_shapes(params, &mut stream(params.seed, STREAM_SHAPE))?;
    let walk = random_walk(l, &mut stream(params.seed, STREAM_WALK));
    let clean_nodes: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let a = k as f64 / (m - 1) as f64;
            pattern.iter().zip(&walk).map(|(p, w)| (1.0 - a) * p + a * w).collect()
        })
        .collect();

    let mut prng = stream(params.seed, STREAM_PLACEMENT);
    let total = m + params.distractor_count;
    let slots = place(total, l, params.core_pad_len, &mut prng);
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut prng);
    let mut chain_slots = order[..m].to_vec();
    chain_slots.sort_unstable();
    let mut distractor_slots = order[m..].to_vec();
    distractor_slots.sort_unstable();

    let mut nrng = stream(params.seed, STREAM_NOISE);
    let bg = params.background_amp;
    let mut uniform = |amp: f64| if amp > 0.0 { nrng.gen_range(-amp..=amp) } else { 0.0 };

    let head = params.head_pad_len;
    let mut values: Vec<f64> = (0..head).map(|_| uniform(bg)).collect();
    let mut core: Vec<f64> = (0..params.core_pad_len).map(|_| uniform(bg)).collect();
    for (node, &slot) in clean_nodes.iter().zip(&chain_slots) {
        core[slots[slot]..slots[slot] + l].copy_from_slice(node);
    }
    for (d, &slot) in distractors.iter().zip(&distractor_slots) {
        core[slots[slot]..slots[slot] + l].copy_from_slice(d);
    }
    for v in core.iter_mut() {
        *v += uniform(params.noise_amp);
    }
    values.extend(core);
    values.extend((0..params.tail_pad_len).map(|_| uniform(bg)));

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION.to_string(),
        window_len: l,
        chain_starts: chain_slots.iter().map(|&s| head + slots[s]).collect(),
        distractor_starts: distractor_slots.iter().map(|&s| head + slots[s]).collect(),
        seed: params.seed,
        rng: RNG_DESCRIPTION.to_string(),
        noise: format!(
            "uniform background in [-{bg}, {bg}] on pads and core; additive uniform in [-{a}, {a}] on the core",
            a = params.noise_amp
        ),
        params: params.clone(),
    };
    Ok(Benchmark {
        series: TimeSeries::new(values)?,
        manifest,
        pattern,
        walk,
        clean_nodes,
        clean_distractors: distractors,
    })
}

pub fn generate(params: &GenParams) -> Result<(TimeSeries, Manifest)> {
    let b = generate_detailed(params)?;
    Ok((b.series, b.manifest))
}
