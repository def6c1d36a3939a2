use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparse_varpro::generate_file;
use sparse_varpro_cli::config::load_problem_spec;
use sparse_varpro_cli::{parse_seed_range, run_experiment, verify, CliError, ExperimentConfig, ModeSelection, VerifyOptions};

/// Sparse recovery with unknown per-channel source weights.
///
/// Log verbosity is read from SVP_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "svp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML or JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// true-weights, unit-weights, estimated-weights or all.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check operators, projections, gradients and the subproblem solver
    /// against independent oracles.
    Verify {
        /// Half-open range `A..B`.
        #[arg(long, default_value = "0..5")]
        seeds: String,
        /// Negate every channel adjoint to exercise the failure path.
        #[arg(long, hide = true)]
        corrupt_adjoint: bool,
    },
    /// Write a generated instance to a JSON instance file.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, mode, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(m) = mode {
                cfg.mode = ModeSelection::parse(&m)?;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let outcome = run_experiment(&cfg)?;
            println!("{}", outcome.summary());
            for path in &outcome.written {
                log::info!("wrote {}", path.display());
            }
        }
        Command::Verify { seeds, corrupt_adjoint } => {
            let report = verify(parse_seed_range(&seeds)?, VerifyOptions { corrupt_adjoint })?;
            print!("{report}");
            report.into_result()?;
        }
        Command::Generate { spec, out } => {
            let file = generate_file(&load_problem_spec(&spec)?)?;
            file.write(&out)
                .map_err(|e| CliError::io(&out, e))?
                .map_err(|e| CliError::io(&out, e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SVP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
