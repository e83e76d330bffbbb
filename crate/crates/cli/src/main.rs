use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use singvec_cli::bench::run_bench;
use singvec_cli::generate::{gen_sparse, gen_toeplitz};
use singvec_cli::matrix_market::save;
use singvec_cli::run_config::RunConfig;
use singvec_cli::solve_cmd::run_solve;
use singvec_cli::verify::{format_report, run_verify, VerifyOptions};
use singvec_cli::CliResult;

#[derive(Parser)]
#[command(name = "singvec", version, about = "Structured distance to singularity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Toeplitz,
    Sparse,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance as a MatrixMarket file.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// Probability of a nonzero entry (sparse only).
        #[arg(long, default_value_t = 0.4)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance and print a JSON record.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a benchmark campaign and write CSV files.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the base seed of the campaign.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the randomized invariant suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Flip the sign of the multiplier update (the dual-update property
        /// must then fail).
        #[arg(long, hide = true)]
        inject_dual_fault: bool,
    },
}

fn load(config: &PathBuf, seed: Option<u64>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Gen { kind, n, p, seed, out } => {
            if n < 2 {
                return Err(singvec_cli::CliError::Config(format!("n must be at least 2, got {n}")));
            }
            match kind {
                Kind::Toeplitz => save(&out, &gen_toeplitz(n, seed), false)?,
                Kind::Sparse => save(&out, &gen_sparse(n, p, seed)?.0, true)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { config, seed } => {
            let record = run_solve(&load(&config, seed)?)?;
            println!("{}", serde_json::to_string(&record).expect("plain record serializes"));
            Ok(if record.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Bench { config, seed } => {
            let cfg = load(&config, seed)?;
            let spec = cfg.bench_spec()?;
            let (summary, _) = run_bench(&spec, &cfg.solver_config()?)?;
            for s in summary {
                println!(
                    "n={} median distance {:.6} median iterations {} median time {:.3}s",
                    s.size, s.median_distance, s.median_iterations, s.median_time_s
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { seed, inject_dual_fault } => {
            let outcomes = run_verify(&VerifyOptions { seed, flip_dual_sign: inject_dual_fault });
            print!("{}", format_report(&outcomes));
            Ok(if outcomes.iter().all(|o| o.passed()) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
