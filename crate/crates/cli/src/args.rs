use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vecbal", version, about = "Online vector balancing experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; trial i runs with a seed derived from (seed, i).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    pub trials: usize,
    /// Failure budget (default 0.01; t^-2 for komlos; 0.1 for interval and tusnady).
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sign a vector stream with the balancing walk.
    Balance(BalanceArgs),
    /// Sign the columns of a sparse matrix.
    Komlos(KomlosArgs),
    /// Online interval discrepancy of a point stream.
    Interval(GeometryArgs),
    /// Online discrepancy over axis-parallel boxes.
    Tusnady(GeometryArgs),
    /// Run several signing rules on the same inputs.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    /// e1 at every step.
    RepeatedBasis,
    /// Independent vectors from --distribution.
    Iid,
    /// s random entries of ±1/√s.
    Sparse,
    /// Unit vectors orthogonal to the running sum.
    AdaptiveOrthogonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    UniformSphere,
    UniformCube,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Dense vector file: header "n t", then t rows of n numbers.
    #[arg(long, conflicts_with_all = ["kind", "n", "t", "s"])]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long = "t")]
    pub t: Option<usize>,
    /// Nonzeros per vector for --kind sparse.
    #[arg(long = "s")]
    pub s: Option<usize>,
    #[arg(long, value_enum, default_value = "uniform-sphere")]
    pub distribution: DistArg,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Write the step-by-step trace of trial 0 as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the signs of trial 0, one per line.
    #[arg(long)]
    pub signs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KomlosArgs {
    /// MatrixMarket coordinate file; every column needs l2 norm at most 1.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Write the signs of trial 0, one per line.
    #[arg(long)]
    pub signs: Option<PathBuf>,
    /// Add a wall_time_s column (not reproducible).
    #[arg(long)]
    pub timing: bool,
    /// One JSON object per trial instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Point file: header "d t", then t points in [0,1]^d.
    #[arg(long, conflicts_with = "sweep")]
    pub points: Option<PathBuf>,
    /// "uniform" or "power:a1,a2,..." (coordinate k is U^a_k).
    #[arg(long)]
    pub dist: Option<String>,
    /// Dimension for --dist uniform.
    #[arg(long = "d")]
    pub d: Option<usize>,
    #[arg(long = "t")]
    pub t: Option<usize>,
    /// Run every listed horizon, e.g. 1024,4096,16384.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<usize>,
    /// Estimate quantiles from this many samples instead of the exact quantile function.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Single query: coordinate (interval only).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Single query: lower corner (comma separated for boxes).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lo: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub hi: Vec<f64>,
    /// Single query: number of points seen (default: all).
    #[arg(long)]
    pub at: Option<usize>,
    /// Query file; lines "k lo hi [at]" for intervals, "lo1,..,lod hi1,..,hid [at]" for boxes.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Write the dyadic signed sums of trial 0 (interval only).
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_delimiter = ',', default_value = "balance,random,greedy")]
    pub algorithms: Vec<String>,
    /// Number of evenly spaced steps on each curve.
    #[arg(long, default_value_t = 20)]
    pub checkpoints: usize,
    /// Potential scale of the greedy rule.
    #[arg(long)]
    pub lambda: Option<f64>,
}
