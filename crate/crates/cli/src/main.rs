use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use frontlab_cli::config::COMMAND_NAMES;
use frontlab_cli::{run_experiment, CliError, ExperimentConfig, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "frontlab", version, about = "Ignition fronts in random media: experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the job pool.
    #[arg(long, env = "FRONTLAB_WORKERS")]
    workers: Option<usize>,
    /// Added to every seed of the config.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    /// Exit nonzero when an embedded assertion fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Sub {
    Simulate(RunArgs),
    FrontSpeed(RunArgs),
    Fluctuations(RunArgs),
    Additivity(RunArgs),
    Wulff(RunArgs),
    Hj(RunArgs),
    Homogenize(RunArgs),
    Exclusivity(RunArgs),
    Perturb(RunArgs),
    Calibrate(RunArgs),
    /// Run whatever command the config names.
    Run(RunArgs),
}

impl Sub {
    fn split(self) -> (Option<&'static str>, RunArgs) {
        match self {
            Sub::Simulate(a) => (Some(COMMAND_NAMES[0]), a),
            Sub::FrontSpeed(a) => (Some(COMMAND_NAMES[1]), a),
            Sub::Fluctuations(a) => (Some(COMMAND_NAMES[2]), a),
            Sub::Additivity(a) => (Some(COMMAND_NAMES[3]), a),
            Sub::Wulff(a) => (Some(COMMAND_NAMES[4]), a),
            Sub::Hj(a) => (Some(COMMAND_NAMES[5]), a),
            Sub::Homogenize(a) => (Some(COMMAND_NAMES[6]), a),
            Sub::Exclusivity(a) => (Some(COMMAND_NAMES[7]), a),
            Sub::Perturb(a) => (Some(COMMAND_NAMES[8]), a),
            Sub::Calibrate(a) => (Some(COMMAND_NAMES[9]), a),
            Sub::Run(a) => (None, a),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (expected, args) = Cli::parse().command.split();
    match execute(expected, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("frontlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(expected: Option<&str>, args: RunArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if let Some(name) = expected {
        if cfg.command.name() != name {
            return Err(CliError::Usage(format!("command.kind: config is `{}`, subcommand is `{name}`", cfg.command.name())));
        }
    }
    let opts = RunOptions { out: args.out, seed_offset: args.seed_offset, workers: args.workers, strict: args.strict };
    let manifest = run_experiment(&cfg, &opts)?;
    println!("{} finished: {} files, config {}", manifest.command, manifest.files.len(), &manifest.config_hash[..16]);
    for a in &manifest.assertions {
        println!("  [{}] {}: {}", if a.passed { "pass" } else { "FAIL" }, a.name, a.detail);
    }
    Ok(())
}
