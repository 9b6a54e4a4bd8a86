use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rsgd", version, about = "Recursive scatter-matrix estimation on the SPD manifold")]
pub struct Cli {
    /// Worker threads for replicated runs (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples from a Kotz-type distribution.
    Sample(SampleArgs),
    /// Run the recursion on a data file or on synthetic samples.
    Estimate(EstimateArgs),
    /// Mean squared distance to the truth against n, over replicated runs.
    McRate(McRateArgs),
    /// Distribution of n·d² at the final step against χ².
    McEfficiency(McEfficiencyArgs),
    /// Fast invariant checks.
    Selfcheck(SelfcheckArgs),
}

/// Where a scatter matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    Identity,
    /// Eigenvalues log-uniform in [0.5, 2], seeded random basis.
    Random(u64),
    /// JSON array of rows.
    File(PathBuf),
}

impl FromStr for ThetaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "identity" {
            return Ok(ThetaSpec::Identity);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed.parse().map(ThetaSpec::Random).map_err(|_| format!("bad seed in `{s}`"));
        }
        if s.is_empty() {
            return Err("empty matrix spec".into());
        }
        Ok(ThetaSpec::File(PathBuf::from(s)))
    }
}

impl std::fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThetaSpec::Identity => write!(f, "identity"),
            ThetaSpec::Random(seed) => write!(f, "random:{seed}"),
            ThetaSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BallCenter {
    Initial,
    Truth,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Dimension of the observations.
    #[arg(long)]
    pub m: usize,
    /// Kotz shape parameter; 1 is the Gaussian.
    #[arg(long)]
    pub s: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// Step-size gain: γₙ = a / n^q.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Step-size exponent, in (1/2, 1].
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BallArgs {
    /// Project every iterate onto a geodesic ball of this radius.
    #[arg(long)]
    pub ball_radius: Option<f64>,
    /// Ball centre (default: the truth when known, else the initial iterate).
    #[arg(long, value_enum, requires = "ball_radius")]
    pub ball_center: Option<BallCenter>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `identity`, `random:<seed>`, or a JSON file of rows.
    #[arg(long, default_value = "identity")]
    pub theta: ThetaSpec,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub ball: BallArgs,
    /// Observations, one per CSV row without a header.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// Draw observations from the model at --theta-star.
    #[arg(long)]
    pub synthetic: bool,
    /// True scatter matrix. Required for distances in data mode.
    #[arg(long, alias = "reference")]
    pub theta_star: Option<ThetaSpec>,
    /// Starting point in data mode (default: identity).
    #[arg(long, conflicts_with = "synthetic")]
    pub theta0: Option<ThetaSpec>,
    /// Distance of the random start from the truth in synthetic mode.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Number of steps; in data mode, a cap on the rows used.
    #[arg(long, required_if_eq("synthetic", "true"))]
    pub n_steps: Option<u64>,
    /// Seed for the random start and the synthetic samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint spacing (default: about a hundred checkpoints).
    #[arg(long)]
    pub record_every: Option<u64>,
    /// Checkpoint CSV, `n,d2,nd2` (just `n` when the truth is unknown).
    #[arg(long)]
    pub out_trajectory: Option<PathBuf>,
    /// Summary JSON (default: stdout).
    #[arg(long)]
    pub out_summary: Option<PathBuf>,
    /// Add wall-clock time to the summary.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub ball: BallArgs,
    #[arg(long, default_value = "identity")]
    pub theta_star: ThetaSpec,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long)]
    pub runs: usize,
    #[arg(long)]
    pub n_steps: u64,
    /// Run i uses seed base-seed + i.
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long)]
    pub record_every: Option<u64>,
    /// Run replications one after another on the calling thread.
    #[arg(long)]
    pub sequential: bool,
    /// Summary JSON (default: stdout).
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    /// Add wall-clock time to the summary.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct McRateArgs {
    #[command(flatten)]
    pub common: McArgs,
    /// Lower end of the fit range (default: max(1000, n/100)).
    #[arg(long)]
    pub fit_from: Option<u64>,
    /// Upper end of the fit range (default: n).
    #[arg(long)]
    pub fit_to: Option<u64>,
}

#[derive(Debug, Args)]
pub struct McEfficiencyArgs {
    #[command(flatten)]
    pub common: McArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Score evaluated under a wrong metric.
    Metric,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}
