//! Single binary exposing the subjective-quality pipeline as subcommands
//! with seeded determinism and machine-readable reports.
//!
//! Exit codes: 0 success, 2 input/usage error, 3 numerical failure.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "vqbench",
    version,
    about = "Subjective quality scaling (Bradley-Terry, Elo, fusion) and metric benchmarking (RDAE, correlations)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Seed feeding every named random stream of the run
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing); a manifest.json with input
    /// digests is always written next to the reports
    #[arg(long)]
    pub out: PathBuf,
    /// Report format (json always written; csv adds tabular exports)
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

impl CommonArgs {
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankMethod {
    Bt,
    Elo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TiePolicyArg {
    HalfWin,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    QualityKbps,
    Gigabits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Mos,
    Dmos,
    Bt,
    Elo,
    Fused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolingArg {
    Max,
    Mean,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Pairwise votes CSV (group_id,item_a,item_b,outcome,observer_id)
    #[arg(long)]
    pub votes: PathBuf,
    /// Optional item catalog CSV; when given, vote items must exist in it
    #[arg(long)]
    pub items: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: RankMethod,
    #[arg(long, value_enum, default_value_t = TiePolicyArg::HalfWin)]
    pub tie_policy: TiePolicyArg,
    /// Logistic scale of the Bradley-Terry observer model
    #[arg(long)]
    pub beta: Option<f64>,
    /// L2 regularization of the BT fit
    #[arg(long, default_value_t = 1e-4)]
    pub reg: f64,
    /// Convergence threshold (gradient max-norm)
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 32.0)]
    pub k_factor: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub initial_rating: f64,
    /// Logistic divisor of the Elo expected-score curve
    #[arg(long, default_value_t = 400.0)]
    pub elo_scale: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_bootstrap: usize,
    /// Stop the bootstrap when percentile bounds settle
    #[arg(long, default_value_t = false)]
    pub early_stop: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub votes: PathBuf,
    /// Ratings CSV (observer_id,item_id,score); without it the fit reduces
    /// to Bradley-Terry with the Gaussian prior
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long)]
    pub items: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TiePolicyArg::HalfWin)]
    pub tie_policy: TiePolicyArg,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Prior spread
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// Use per-item prior variance sigma^2 instead of n_items * sigma^2
    #[arg(long, default_value_t = false)]
    pub plain_variance: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Freeze the link at "a,b,c" and fit qualities only
    #[arg(long)]
    pub freeze_link: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct RdaeArgs {
    #[arg(long)]
    pub items: PathBuf,
    /// Subjective scores document (JSON, as written by rank/fuse)
    #[arg(long)]
    pub subjective: PathBuf,
    /// Metric scores CSV (item_id,score)
    #[arg(long)]
    pub metric: PathBuf,
    #[arg(long, value_enum, default_value_t = UnitsArg::QualityKbps)]
    pub units: UnitsArg,
    /// Skip the quantile-matching calibration of metric scores
    #[arg(long, default_value_t = false)]
    pub no_calibrate: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub items: PathBuf,
    #[arg(long)]
    pub subjective: PathBuf,
    /// Directory of metric score tables (one item_id,score CSV per metric)
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, value_enum, default_value_t = BasisArg::Mos)]
    pub basis: BasisArg,
    #[arg(long, value_enum, default_value_t = UnitsArg::QualityKbps)]
    pub units: UnitsArg,
    #[arg(long, default_value_t = false)]
    pub no_calibrate: bool,
    /// Comma-separated names of full-reference metrics (evaluated against
    /// DMOS under the MOS basis)
    #[arg(long, value_delimiter = ',')]
    pub fr: Vec<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config JSON; a built-in default is used when absent
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DiversityArgs {
    /// Directory of .y4m clips to extract SI/TI features from
    #[arg(long, conflicts_with = "features")]
    pub y4m: Option<PathBuf>,
    /// Precomputed feature CSV (video_id, then numeric feature columns)
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Number of clusters; omit to only extract features
    #[arg(long)]
    pub k: Option<usize>,
    /// Candidates sampled per cluster
    #[arg(long, default_value_t = 10)]
    pub per_cluster: usize,
    #[arg(long, value_enum, default_value_t = PoolingArg::Max)]
    pub pooling: PoolingArg,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    /// Split-half iterations
    #[arg(long, default_value_t = 100)]
    pub n_iter: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Rank items per group from pairwise votes (Bradley-Terry or Elo)
    Rank(RankArgs),
    /// Fuse pairwise votes and ratings onto one quality scale
    Fuse(FuseArgs),
    /// Rate-distortion alignment error of one metric
    Rdae(RdaeArgs),
    /// Benchmark a directory of metrics: RDAE plus correlations
    Bench(BenchArgs),
    /// Generate synthetic study data and run the recovery experiment
    Simulate(SimulateArgs),
    /// SI/TI complexity features and k-means source clustering
    Diversity(DiversityArgs),
    /// Inter-/intra-subject consistency of a rating set
    Consistency(ConsistencyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rank(args) => commands::cmd_rank(&args),
        Command::Fuse(args) => commands::cmd_fuse(&args),
        Command::Rdae(args) => commands::cmd_rdae(&args),
        Command::Bench(args) => commands::cmd_bench(&args),
        Command::Simulate(args) => commands::cmd_simulate(&args),
        Command::Diversity(args) => commands::cmd_diversity(&args),
        Command::Consistency(args) => commands::cmd_consistency(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Replaces characters unfit for file names in group ids.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn parse_fr_set(fr: &[String]) -> BTreeSet<String> {
    fr.iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().to_string())
        .collect()
}
