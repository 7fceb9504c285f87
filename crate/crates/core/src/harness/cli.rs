//! Argument parsing for the `rna` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Result, RnaError};
use crate::extrapolation::{WeightTarget, DEFAULT_LAMBDA, DEFAULT_WINDOW};
use crate::io::Precision;

use super::commands::{cmd_accelerate, cmd_run, cmd_sweep, AccelerateArgs, EXIT_USAGE};
use super::spec::{ExperimentSpec, ProblemSpec};

#[derive(Debug, Parser)]
#[command(name = "rna", version, about = "Regularized nonlinear acceleration of optimizer iterates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a built-in problem and record vanilla and extrapolated metrics.
    Run(RunArgs),
    /// Extrapolate a stored checkpoint sequence.
    Accelerate(AccelerateCli),
    /// Run one experiment per (K, lambda) cell.
    Sweep(SweepArgs),
}

/// Flags shared by `run` and `sweep`; each overrides the config file.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment description in TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// quadratic, logistic or mlp (with default sizes).
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Fixed step size; disables the 1/L default.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub flush_on_drop: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Metrics file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the last extrapolated point as a checkpoint file.
    #[arg(long)]
    pub checkpoint_out: Option<PathBuf>,
    /// Save the resolved experiment description and exit.
    #[arg(long)]
    pub write_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Latest,
    Oldest,
}

impl From<TargetArg> for WeightTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Latest => WeightTarget::LatestK,
            TargetArg::Oldest => WeightTarget::OldestK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    F32,
    F64,
}

#[derive(Debug, Args)]
pub struct AccelerateCli {
    /// Checkpoint file, or a directory of them.
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Per-checkpoint objective values, whitespace or comma separated.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TargetArg::Latest)]
    pub target: TargetArg,
    #[arg(long, value_enum, default_value_t = PrecisionArg::F64)]
    pub precision: PrecisionArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Window sizes to try.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub k: Vec<usize>,
    /// Ridge values to try.
    #[arg(long, value_delimiter = ',', default_value = "1e-8")]
    pub lambda: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(name) = &self.problem {
            spec.problem = ProblemSpec::named(name, 0)?;
        }
        if let Some(seed) = self.seed {
            spec.set_seed(seed);
        }
        if let Some(epochs) = self.epochs {
            spec.epochs = epochs;
        }
        if let Some(eta) = self.eta {
            spec.optimizer.eta = eta;
            spec.eta_from_smoothness = false;
        }
        if self.flush_on_drop {
            spec.flush_on_drop = true;
        }
        Ok(spec)
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let mut spec = self.experiment.resolve()?;
        if let Some(k) = self.k {
            spec.rna.window = k;
        }
        if let Some(lambda) = self.lambda {
            spec.rna.lambda = lambda;
        }
        if let Some(grid) = &self.lambda_grid {
            spec.rna.lambda_grid = Some(grid.clone());
        }
        if let Some(out) = &self.out {
            spec.output.metrics = Some(out.clone());
        }
        if let Some(ckpt) = &self.checkpoint_out {
            spec.output.checkpoint = Some(ckpt.clone());
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl AccelerateCli {
    pub fn to_args(&self) -> AccelerateArgs {
        AccelerateArgs {
            input: self.input.clone(),
            window: self.k,
            lambda: self.lambda,
            lambda_grid: self.lambda_grid.clone(),
            scores: self.scores.clone(),
            target: self.target.into(),
            out: self.out.clone(),
            precision: match self.precision {
                PrecisionArg::F32 => Precision::F32,
                PrecisionArg::F64 => Precision::F64,
            },
        }
    }
}

fn usage_error(e: RnaError) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run(args) => match args.resolve() {
            Ok(spec) => match &args.write_config {
                Some(path) => match spec.save(path) {
                    Ok(()) => 0,
                    Err(e) => usage_error(e),
                },
                None => cmd_run(&spec),
            },
            Err(e) => usage_error(e),
        },
        Command::Accelerate(args) => cmd_accelerate(&args.to_args()),
        Command::Sweep(args) => match args.experiment.resolve().and_then(|s| s.validate().map(|_| s)) {
            Ok(spec) => cmd_sweep(&spec, &args.k, &args.lambda, &args.out),
            Err(e) => usage_error(e),
        },
    }
}

/// Parses `args` (program name first) and executes; clap usage errors exit 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            code
        }
    }
}
