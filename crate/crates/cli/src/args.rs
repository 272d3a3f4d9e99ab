use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tschain::benchgen::ShapeFamily;
use tschain::chains::Method;
use tschain::evaluation::Protocol;
use tschain::DistanceMode;

#[derive(Parser, Debug)]
#[command(name = "tschain", version, about = "Time series chain discovery and evaluation")]
pub struct Cli {
    /// Maximum number of worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write left/right profiles as CSV and optionally the INNS table as JSON.
    Profiles(ProfilesArgs),
    /// Discover chains and emit the top-ranked ones as JSON.
    Discover(DiscoverArgs),
    /// Score and order the chains of a discovery JSON.
    Rank(RankArgs),
    /// Generate a synthetic benchmark series and its manifest.
    Synth(SynthArgs),
    /// Evaluate one method on a benchmark series against its manifest.
    Eval(EvalArgs),
    /// Run the seeded benchmark suite and emit a summary CSV.
    Bench(BenchArgs),
    /// Check the fast profile and chain code against the brute-force oracle.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Series file: one value per line or CSV; `-` reads stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV column by header name or 0-based position.
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Args, Debug)]
pub struct WindowArgs {
    /// Subsequence length.
    #[arg(long)]
    pub window: usize,
    #[arg(long, default_value = "znorm")]
    pub mode: DistanceMode,
    /// Exclusion radius (default: ceil(window / 2)).
    #[arg(long)]
    pub exclusion: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ProfilesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Abort if the INNS table exceeds this many entries.
    #[arg(long)]
    pub max_inns: Option<usize>,
    /// Profile CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// INNS table JSON destination.
    #[arg(long)]
    pub inns: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value = "tsc22")]
    pub method: Method,
    /// Direction-angle threshold in degrees (tsc20 only).
    #[arg(long, default_value_t = 40.0)]
    pub angle: f64,
    /// Number of chains to emit.
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
    #[arg(long, default_value_t = 100_000)]
    pub max_candidates: usize,
    /// Emit every candidate unscored in canonical order instead of ranking.
    #[arg(long)]
    pub no_rank: bool,
    /// Destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    /// Discovery JSON produced by `discover`.
    #[arg(long)]
    pub chains: PathBuf,
    /// The series the chains were discovered on.
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub nodes: usize,
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    #[arg(long, default_value_t = 10)]
    pub distractors: usize,
    #[arg(long, default_value = "sine", conflicts_with = "ucr")]
    pub shape: ShapeFamily,
    /// UCR-format file supplying the base pattern.
    #[arg(long)]
    pub ucr: Option<PathBuf>,
    /// UCR class label to draw from.
    #[arg(long, requires = "ucr")]
    pub class: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub background: f64,
    #[arg(long, default_value_t = 8000)]
    pub core: usize,
    #[arg(long, default_value_t = 4000)]
    pub head: usize,
    #[arg(long, default_value_t = 4000)]
    pub tail: usize,
    /// Series CSV destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest JSON destination.
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "tsc22")]
    pub method: Method,
    #[arg(long, default_value = "rank")]
    pub protocol: Protocol,
    #[arg(long, default_value = "znorm")]
    pub mode: DistanceMode,
    #[arg(long, default_value_t = 40.0)]
    pub angle: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Shape families (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "sine,bump,cylinder,bell,two-peak")]
    pub families: Vec<ShapeFamily>,
    /// Seeds (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "tsc17,tsc20,tsc22")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 10)]
    pub nodes: usize,
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    #[arg(long, default_value_t = 10)]
    pub distractors: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub background: f64,
    #[arg(long, default_value_t = 8000)]
    pub core: usize,
    #[arg(long, default_value_t = 4000)]
    pub head: usize,
    #[arg(long, default_value_t = 4000)]
    pub tail: usize,
    #[arg(long, default_value = "znorm")]
    pub mode: DistanceMode,
    #[arg(long, default_value_t = 40.0)]
    pub angle: f64,
    /// Per-instance reports as JSON.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Series length per trial.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Trials per configuration.
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
