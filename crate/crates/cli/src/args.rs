use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use qfrans::circuits::OracleKind;
use qfrans::fps::ScheduleKind;
use qfrans::resources::ScalingKind;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qfrans", version, about = "Fixed-radius neighbor search by fixed-point amplitude amplification")]
pub struct Cli {
    /// Read `key = value` defaults from FILE; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-iteration amplitudes and success probabilities of one schedule.
    FpsCurves(FpsCurvesArgs),
    /// Expected oracle calls to the first success against the space size.
    Scaling(ScalingArgs),
    /// Simulate the full search on a dataset and write a JSON report.
    Run(RunArgs),
    /// Enumerate neighbor pairs classically.
    Brute(BruteArgs),
    /// Counted and modelled circuit resources over a range of word widths.
    Resources(ResourcesArgs),
    /// Readout bit-flip study, optionally with the error-detection filter.
    Noise(NoiseArgs),
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct FpsCurvesArgs {
    /// Initial angle; alternative to --M/--S.
    #[arg(long, conflicts_with_all = ["m", "s"])]
    pub theta: Option<f64>,
    /// Marked states.
    #[arg(long = "M", requires = "s")]
    pub m: Option<u64>,
    /// Size of the search space.
    #[arg(long = "S", requires = "m")]
    pub s: Option<u64>,
    #[arg(long, default_value = "decreasing")]
    pub schedule: ScheduleKind,
    /// Angles of a custom schedule; the last one repeats.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub angles: Vec<f64>,
    /// Iterations to tabulate.
    #[arg(long = "K", default_value_t = 60)]
    pub k: usize,
    /// Recorded in the metadata; the curves themselves are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "fps_curves.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ScalingArgs {
    #[arg(long = "S-list", value_delimiter = ',', action = ArgAction::Set, default_value = "16,32,64,128,256,512,1024,2048,4096,8192,16384")]
    pub s_list: Vec<u64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "critical,decreasing")]
    pub schedules: Vec<ScheduleKind>,
    /// Monte-Carlo draws per row; 0 leaves the MC columns empty.
    #[arg(long, default_value_t = 1000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "scaling.csv")]
    pub out: PathBuf,
}

/// Dataset and radius selection shared by `run`, `brute` and `noise`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// CSV with `label,position` (integers) or `label,x[,y,z]` (reals).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Integer radius on the grid: pairs with distance <= h.
    #[arg(long, conflicts_with = "xi")]
    pub h: Option<u64>,
    /// Real radius, converted with --dx.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Grid spacing for real coordinates and --xi.
    #[arg(long)]
    pub dx: Option<f64>,
    /// Extent of real coordinates; also sets the prior's domain.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Use `d < xi` instead of `d <= xi` when converting --xi.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "exclude-zero")]
    pub variant: OracleKind,
    #[arg(long, default_value = "critical")]
    pub schedule: ScheduleKind,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub angles: Vec<f64>,
    /// Position width in bits; inferred from the data and radius when unset.
    #[arg(long)]
    pub q1: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub u0: f64,
    #[arg(long)]
    pub iteration_cap: Option<usize>,
    #[arg(long)]
    pub max_oracle_calls: Option<u64>,
    /// Re-aim the critical angle at the posterior mean after each success.
    #[arg(long)]
    pub adaptive: bool,
    /// Skip the distance-register check of measured pairs.
    #[arg(long)]
    pub no_error_detection: bool,
    /// Include per-attempt ancilla transcripts in the report.
    #[arg(long)]
    pub transcripts: bool,
    #[arg(long, default_value = "run.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct BruteArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "exclude-zero")]
    pub variant: OracleKind,
    #[arg(long, default_value = "pairs.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ResourcesArgs {
    /// Inclusive range such as `4..16`, or a single width.
    #[arg(long, default_value = "4..16")]
    pub q1_range: String,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "oracle-include-zero,oracle-exclude-zero,diagonal-oracle,mcz-chain,prep-unstructured,reflection,subtractor")]
    pub kinds: Vec<ScalingKind>,
    /// Particles for the preparation and reflection rows.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Exclusive threshold for the oracle rows.
    #[arg(long, default_value_t = 3)]
    pub threshold: u64,
    #[arg(long, default_value = "resources.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct NoiseArgs {
    /// Label width; defaults to the dataset's when --data is given.
    #[arg(long)]
    pub q0: Option<usize>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0,0.0001,0.0001675,0.001,0.01")]
    pub rate_grid: Vec<f64>,
    /// End-to-end success target for the threshold in the metadata.
    #[arg(long, default_value_t = 0.99)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "exclude-zero")]
    pub variant: OracleKind,
    #[arg(long, default_value = "noise_sweep.csv")]
    pub out: PathBuf,
}

/// Parse `a..b`, `a..=b` or `a` into an inclusive list.
pub fn parse_range(text: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("bad range `{text}` (expected `a..b` or `a`)");
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
        }
        None => {
            let v: usize = text.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range `{text}`"));
    }
    Ok((lo..=hi).collect())
}
