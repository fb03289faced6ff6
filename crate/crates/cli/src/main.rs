use std::path::PathBuf;
use std::process::ExitCode;

use arm_core::sbn::Architecture;
use arm_harness::config::parse_estimator_list;
use arm_harness::{ConfigOverrides, DatasetSpec, Experiment, ExperimentConfig, HarnessError, ToyOptimizer};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arm", version, about = "ARM gradient estimator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gradient ascent on the toy objective E[(z - p0)^2].
    Toy(Flags),
    /// Mean, spread and SNR of single-sample estimates across a logit grid.
    VarianceReport(Flags),
    /// Train a discrete VAE with ARM gradients.
    TrainVae(Flags),
    /// Train a conditional stochastic binary network with ARM gradients.
    TrainMle(Flags),
    /// Statistical property checks against the exact oracles.
    PropertySuite(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated list, e.g. `true,reinforce,ar,arm`.
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi0: Option<f64>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Toy update rule: `sgd` or `adam`.
    #[arg(long)]
    optimizer: Option<String>,
    /// Constant baseline for `ar-const-baseline`.
    #[arg(long, allow_hyphen_values = true)]
    baseline: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Samples per estimate: grid-point sample count, evaluation draws or importance samples.
    #[arg(long)]
    k: Option<usize>,
    /// `nonlinear`, `linear` or `linear2`.
    #[arg(long)]
    arch: Option<String>,
    /// Comma-separated stochastic layer widths.
    #[arg(long)]
    latent: Option<String>,
    /// `synthetic` or `file:PATH`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    variance_every: Option<u64>,
    #[arg(long)]
    eval_every: Option<u64>,
    /// Monte Carlo size of the property-suite unbiasedness checks.
    #[arg(long)]
    samples: Option<usize>,
    /// Record wall-clock milliseconds instead of zeros.
    #[arg(long)]
    timing: bool,
}

impl Flags {
    fn overrides(&self) -> Result<ConfigOverrides, HarnessError> {
        let cfg_err = |e: arm_core::ArmError| HarnessError::Config(e.to_string());
        Ok(ConfigOverrides {
            seed: self.seed,
            out: self.out.clone(),
            estimators: self.estimators.as_deref().map(parse_estimator_list).transpose()?,
            p0: self.p0,
            phi0: self.phi0,
            iterations: self.iters,
            stepsize: self.lr,
            optimizer: self.optimizer.as_deref().map(str::parse::<ToyOptimizer>).transpose()?,
            baseline: self.baseline,
            batch: self.batch,
            k: self.k,
            arch: self
                .arch
                .as_deref()
                .map(str::parse::<Architecture>)
                .transpose()
                .map_err(cfg_err)?,
            latent: self
                .latent
                .as_deref()
                .map(|s| {
                    s.split(',')
                        .map(|w| w.trim().parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| HarnessError::Config(format!("--latent: {e}")))
                })
                .transpose()?,
            dataset: self.dataset.as_deref().map(str::parse::<DatasetSpec>).transpose()?,
            variance_every: self.variance_every,
            eval_every: self.eval_every,
            samples: self.samples,
            timing: self.timing.then_some(true),
            ..Default::default()
        })
    }
}

fn run(experiment: Experiment, flags: &Flags) -> Result<Vec<PathBuf>, HarnessError> {
    let file = match &flags.config {
        Some(path) => ConfigOverrides::load(path)?,
        None => ConfigOverrides::default(),
    };
    let cfg = ExperimentConfig::resolve(experiment, file, flags.overrides()?)?;
    arm_harness::execute(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match &cli.command {
        Command::Toy(f) => (Experiment::Toy, f),
        Command::VarianceReport(f) => (Experiment::VarianceReport, f),
        Command::TrainVae(f) => (Experiment::TrainVae, f),
        Command::TrainMle(f) => (Experiment::TrainMle, f),
        Command::PropertySuite(f) => (Experiment::PropertySuite, f),
    };
    match run(experiment, flags) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
