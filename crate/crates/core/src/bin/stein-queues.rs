use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stein_queues::harness::criteria::Suite;
use stein_queues::harness::{rate_fit, read_points, run_experiment, ExperimentConfig, RateShape};

#[derive(Parser)]
#[command(version, about = "Diffusion approximations of M/M/1 and M/M/∞ queues, checked numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
    /// Fit a decay rate to `(n, estimate)` points.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "theorem")]
        shape: ShapeArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Gram,
    #[value(name = "appendixB")]
    AppendixB,
    Bounds,
    Theta,
    Ppp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Power,
    Theorem,
}

fn configure_threads() {
    if let Ok(v) = std::env::var("STEIN_QUEUES_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring STEIN_QUEUES_THREADS={v:?}"),
        }
    }
}

fn run(cli: Cli) -> stein_queues::Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::from_file(&config)?;
            let report = run_experiment(&config)?;
            match &config.output {
                Some(out) => report.write(out)?,
                None => println!("{}", report.to_json()?),
            }
            for v in &report.verdicts {
                eprintln!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            Ok(report.passed())
        }
        Command::Verify { suite } => {
            let suite = match suite {
                SuiteArg::Gram => Suite::Gram,
                SuiteArg::AppendixB => Suite::AppendixB,
                SuiteArg::Bounds => Suite::Bounds,
                SuiteArg::Theta => Suite::Theta,
                SuiteArg::Ppp => Suite::Ppp,
            };
            let results = suite.run()?;
            for r in &results {
                println!("{r}");
            }
            Ok(results.iter().all(|r| r.passed))
        }
        Command::Fit { input, shape } => {
            let shape = match shape {
                ShapeArg::Power => RateShape::PowerLaw,
                ShapeArg::Theorem => RateShape::Theorem,
            };
            let fit = rate_fit(&read_points(&input)?, shape)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
