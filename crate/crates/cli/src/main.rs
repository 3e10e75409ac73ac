use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use outlab::acceptance::run_catalog;
use outlab::config::{ConfigFile, Experiment, ExperimentConfig};
use outlab::experiments::{run_experiment, MAX_FAILURE_FRACTION};
use outlab::output::write_outputs;
use outlab::CliError;
use outlab_core::ensembles::AtomDistribution;

#[derive(Parser)]
#[command(name = "outlab", version, about = "Outlier eigenvalues of perturbed iid random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run(RunArgs),
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum, default_value = "acceptance")]
        suite: Suite,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Acceptance,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// JSON file with any subset of the configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// rademacher, gaussian_real, gaussian_complex or uniform_bounded.
    #[arg(long, value_parser = parse_atom)]
    atom: Option<AtomDistribution>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write scatter.svg.
    #[arg(long)]
    svg: bool,
    /// Defaults to OUTLAB_WORKERS, then the number of cores.
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_atom(s: &str) -> Result<AtomDistribution, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let flags = ConfigFile {
        experiment: args.experiment,
        n: args.n,
        atom: args.atom,
        trials: args.trials,
        master_seed: args.seed,
        epsilon: args.epsilon,
        mu: args.mu,
        p: args.p,
        out: args.out,
        emit_svg: args.svg.then_some(true),
        workers: args.workers,
        ..Default::default()
    };
    let config = ExperimentConfig::resolve(file, flags)?;
    let output = run_experiment(&config)?;
    write_outputs(&output, &config.out)?;
    let s = &output.summary;
    for check in &s.checks {
        println!("[{}] {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    println!("{} trials, {} failed; wrote {}", s.trials, s.failed_trials.len(), config.out.display());
    if s.failure_fraction() > MAX_FAILURE_FRACTION {
        return Err(CliError::TrialFailures { failed: s.failed_trials.len(), total: s.trials });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Verify { suite: Suite::Acceptance, workers } => {
            let results = run_catalog(workers, |r| println!("{}", r.line()));
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", results.len() - failed, results.len());
            if failed == 0 {
                Ok(())
            } else {
                return ExitCode::from(1);
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("outlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
