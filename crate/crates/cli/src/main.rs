//! `gcmvs`: geometric consistency checks, ground-truth filtering, fusion,
//! evaluation and synthetic scene generation for MVS depth maps.
//!
//! Exit codes: 0 success, 1 input error, 2 constraint violation.

mod commands;
mod config;
mod scene;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Worker-pool size; defaults to the number of CPUs.
pub const WORKERS_ENV: &str = "GCMVS_WORKERS";

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input.
    Input(String),
    /// Inputs are well-formed but violate a parameter constraint.
    Constraint(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 1,
            Self::Constraint(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Input(m) => write!(f, "input error: {m}"),
            Self::Constraint(m) => write!(f, "constraint violation: {m}"),
        }
    }
}

impl From<gcmvs::Error> for CliError {
    fn from(e: gcmvs::Error) -> Self {
        match e {
            gcmvs::Error::Config(_) => Self::Constraint(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gcmvs", version, about = "Multi-view geometric consistency toolkit for MVS depth maps")]
struct Cli {
    /// TOML file with per-subcommand defaults ([check], [filter], ...).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Penalty maps of estimated depths against ground-truth source views.
    Check(CheckArgs),
    /// Remove geometrically inconsistent ground-truth depth pixels.
    Filter(FilterArgs),
    /// Fuse estimated depth maps into a PLY point cloud.
    Fuse(FuseArgs),
    /// Score a point cloud or a depth map against ground truth.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Write a synthetic plane or sphere scene.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Scene directory (cams/, depths_est/, gt_depths/, pair.txt).
    pub scene: PathBuf,
    /// Output directory for penalty and mask-sum PFMs.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Number of source views checked per reference view.
    #[arg(long)]
    pub m: Option<usize>,
    /// Pixel displacement threshold (defaults to the stage's value).
    #[arg(long)]
    pub d_pixel: Option<f64>,
    /// Relative depth threshold (defaults to the stage's value).
    #[arg(long)]
    pub d_depth: Option<f64>,
    /// Penalty range: 1-2 or 1-3.
    #[arg(long)]
    pub range: Option<String>,
    /// coarse, intermediate, refine or all.
    #[arg(long)]
    pub stage: Option<String>,
    /// Depth sampling: bilinear or nearest.
    #[arg(long)]
    pub sample: Option<String>,
    /// Restrict to these reference view ids.
    #[arg(long, value_delimiter = ',')]
    pub views: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    pub scene: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub d_pixel: Option<f64>,
    #[arg(long)]
    pub d_depth: Option<f64>,
    /// Remove a pixel once this fraction of the M views flags it.
    #[arg(long)]
    pub min_inconsistent_frac: Option<f64>,
    #[arg(long)]
    pub sample: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub views: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    pub scene: PathBuf,
    /// Output PLY file.
    #[arg(long, short)]
    pub out: PathBuf,
    /// static or dynamic.
    #[arg(long)]
    pub mode: Option<String>,
    /// Minimum confidence.
    #[arg(long)]
    pub conf: Option<f64>,
    #[arg(long)]
    pub consistency_min: Option<usize>,
    /// Static mode pixel threshold.
    #[arg(long)]
    pub reproj_px: Option<f64>,
    /// Static mode relative depth threshold.
    #[arg(long)]
    pub rel_depth: Option<f64>,
    #[arg(long)]
    pub dyn_px_slope: Option<f64>,
    #[arg(long)]
    pub dyn_rel_slope: Option<f64>,
    /// Use at most this many pair-file sources per view.
    #[arg(long)]
    pub num_src: Option<usize>,
    /// mean or median.
    #[arg(long)]
    pub aggregate: Option<String>,
    #[arg(long)]
    pub sample: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Accuracy / completeness of a predicted PLY against a ground-truth PLY.
    Cloud(EvalCloudArgs),
    /// EPE / e1 / e3 of a predicted PFM against a ground-truth PFM.
    Depth(EvalDepthArgs),
}

#[derive(Debug, Args)]
pub struct EvalCloudArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Distance cut-off; required (flag or config file).
    #[arg(long)]
    pub max_dist: Option<f64>,
    /// Directory for the effective-settings sidecar.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalDepthArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub e1_thresh: Option<f64>,
    #[arg(long)]
    pub e3_thresh: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output scene directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// plane or sphere.
    #[arg(long)]
    pub surface: Option<String>,
    #[arg(long)]
    pub views: Option<usize>,
    /// WIDTHxHEIGHT.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn init_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_workers()?;
    let file = config::ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Check(a) => commands::check(a, file.check),
        Command::Filter(a) => commands::filter(a, file.filter),
        Command::Fuse(a) => commands::fuse(a, file.fuse),
        Command::Eval(EvalCommand::Cloud(a)) => commands::eval_cloud(a, file.eval),
        Command::Eval(EvalCommand::Depth(a)) => commands::eval_depth(a, file.eval),
        Command::Synth(a) => commands::synth(a, file.synth),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gcmvs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
