//! `frankenfilter`: dataset synthesis, filter replicate studies, tuning,
//! PMMH runs and exact verification of the estimators.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frankenfilter::filters::Proposal;
use frankenfilter::models::ModelName;
use frankenfilter::tuning::{Rounding, SMOOTHING_REPLICATES};

use crate::config::{FilterKind, FilterSection};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "frankenfilter", version, about = "Unbiased adaptive particle filters for Markov jump processes")]
struct Cli {
    /// Experiment configuration (JSON); command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed of every random stream the command uses.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for replicate-parallel work.
    #[arg(long, global = true, env = "FF_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesise a dataset (CSV plus JSON sidecar).
    Simulate(SimulateArgs),
    /// Replicate a likelihood estimator at a fixed parameter.
    Filter(FilterCmdArgs),
    /// Recommend the success target and simulation cap.
    Tune(TuneArgs),
    /// Run particle marginal Metropolis–Hastings.
    Pmmh(PmmhArgs),
    /// Run the exact verification grid.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// Named synthetic dataset, e.g. D50 or LV20prey.
    #[arg(long, conflicts_with = "data")]
    pub preset: Option<String>,
    /// Dataset CSV with a JSON sidecar of the same stem.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Parameter value (comma separated); defaults to the generating value.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProposalArg {
    Forward,
    Bridge,
}

impl From<ProposalArg> for Proposal {
    fn from(p: ProposalArg) -> Self {
        match p {
            ProposalArg::Forward => Proposal::Forward,
            ProposalArg::Bridge => Proposal::Bridge,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct FilterArgs {
    #[arg(long = "filter", value_enum)]
    pub kind: Option<FilterKind>,
    /// Success target.
    #[arg(long = "s")]
    pub s_target: Option<f64>,
    #[arg(long)]
    pub m_minus: Option<usize>,
    #[arg(long)]
    pub m_plus: Option<usize>,
    #[arg(long)]
    pub n_particles: Option<usize>,
    #[arg(long, value_enum)]
    pub proposal: Option<ProposalArg>,
    /// Simulation budget after which the alive filter aborts.
    #[arg(long)]
    pub guard: Option<u64>,
}

impl FilterArgs {
    pub fn merge(&self, base: &FilterSection) -> FilterSection {
        FilterSection {
            kind: self.kind.or(base.kind),
            s_target: self.s_target.or(base.s_target),
            m_minus: self.m_minus.or(base.m_minus),
            m_plus: self.m_plus.or(base.m_plus),
            n_particles: self.n_particles.or(base.n_particles),
            proposal: self.proposal.map(Proposal::from).or(base.proposal),
            guard: self.guard.or(base.guard),
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Model for explicit settings (death, dimer, lv, seir).
    #[arg(long, conflicts_with = "preset")]
    pub model: Option<ModelName>,
    #[arg(long, value_delimiter = ',', requires = "model")]
    pub theta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires = "model")]
    pub x0: Option<Vec<i64>>,
    #[arg(long, requires = "model")]
    pub dt: Option<f64>,
    #[arg(long, requires = "model")]
    pub t_max: Option<f64>,
    /// Observed species indices (zero-based); all species when omitted.
    #[arg(long, value_delimiter = ',', requires = "model")]
    pub observed: Option<Vec<usize>>,
    /// File stem of the written dataset; defaults to the preset or model name.
    #[arg(long)]
    pub name: Option<String>,
    /// Print per-interval transition probability estimates at the generating value.
    #[arg(long)]
    pub estimate_pt: bool,
    /// Success target of the alive-filter pilot behind `--estimate-pt`.
    #[arg(long, default_value_t = 100)]
    pub pilot_s: usize,
}

#[derive(Args, Debug)]
pub struct FilterCmdArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TuneMethod {
    ExactObs,
    PartialObs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RoundingArg {
    Ceiling,
    Nearest,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Ceiling => Rounding::Ceiling,
            RoundingArg::Nearest => Rounding::Nearest,
        }
    }
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Defaults to exact-obs for complete observations, partial-obs otherwise.
    #[arg(long, value_enum)]
    pub method: Option<TuneMethod>,
    /// Target relative variance of the likelihood estimator.
    #[arg(long, default_value_t = 1.0)]
    pub v_rel: f64,
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = RoundingArg::Ceiling)]
    pub rounding: RoundingArg,
    /// Success target of the alive-filter pilot for the per-interval probabilities.
    #[arg(long, default_value_t = 100)]
    pub pilot_s: usize,
    #[arg(long, default_value_t = 3)]
    pub s_lo: u64,
    #[arg(long, default_value_t = 400)]
    pub s_hi: u64,
    /// Filter runs per relative-variance estimate (partial-obs).
    #[arg(long, default_value_t = 100)]
    pub vrel_replicates: usize,
    /// Estimates averaged per bisection evaluation (partial-obs).
    #[arg(long, default_value_t = SMOOTHING_REPLICATES)]
    pub smoothing: u32,
    #[arg(long, default_value_t = 10_000_000)]
    pub vrel_m_plus: usize,
    #[arg(long, value_enum)]
    pub proposal: Option<ProposalArg>,
}

#[derive(Args, Debug)]
pub struct PmmhArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Initial parameter; defaults to the generating value.
    #[arg(long, value_delimiter = ',')]
    pub theta0: Option<Vec<f64>>,
    /// Scale of the random-walk covariance; defaults to 2.38²/d.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Log-scale random-walk standard deviations before the gamma factor.
    #[arg(long, value_delimiter = ',')]
    pub proposal_sd: Option<Vec<f64>>,
    /// Length of a pilot chain whose log-draw covariance sets the main proposal.
    #[arg(long)]
    pub pilot_iterations: Option<usize>,
    /// Fraction of leading draws discarded from every summary.
    #[arg(long)]
    pub burn_in: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GridArg {
    Default,
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum IncludeArg {
    /// Hard-threshold alive filter, expected to fail the unbiasedness check.
    Alg1,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = GridArg::Default)]
    pub grid: GridArg,
    #[arg(long, value_enum)]
    pub include: Vec<IncludeArg>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => config::ExperimentConfig::load(path)?,
        None => config::ExperimentConfig::default(),
    };
    let out = cli.out.clone().or_else(|| config.output.clone());
    let ctx = commands::Context {
        seed: cli.seed.or(config.seed),
        out_given: out.is_some(),
        out: out.unwrap_or_else(|| PathBuf::from(".")),
        config,
    };
    match cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, &a),
        Command::Filter(a) => commands::filter(&ctx, &a),
        Command::Tune(a) => commands::tune(&ctx, &a),
        Command::Pmmh(a) => commands::pmmh(&ctx, &a),
        Command::Verify(a) => commands::verify(&ctx, &a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
