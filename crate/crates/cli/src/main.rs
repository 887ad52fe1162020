use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use capflow_cli::{
    load_config, resolve_output_dir, simulate, sweep, sweep_exit_code, validate, CliError,
    SweepGrid, EXIT_CONFIG, OUT_ENV,
};
use clap::{Parser, Subcommand};

/// Area-preserving curvature flow of surfaces of revolution between two planes.
#[derive(Parser)]
#[command(name = "capflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write timeseries.csv, profiles and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print whether the initial surface meets the convergence hypotheses.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a config template over the cartesian product of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let env_dir = std::env::var_os(OUT_ENV);
    match cli.command {
        Command::Simulate { config } => {
            let cfg = load_config(&config)?;
            let dir = resolve_output_dir(&cfg.output.dir, env_dir);
            let s = simulate(&cfg, &dir)?;
            println!(
                "{:?} at t = {} after {} steps; verdict {:?}; {} violations; output in {}",
                s.status,
                s.t_final,
                s.steps,
                s.verdict,
                s.violations.len(),
                dir.display()
            );
            Ok(s.exit_code)
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let report = validate(&cfg).map_err(|source| CliError::Config { path: config, source })?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Command::Sweep { config, grid } => {
            let cfg = load_config(&config)?;
            let template = fs::read_to_string(&config).with_context(|| config.display().to_string())?;
            let grid_text = fs::read_to_string(&grid).with_context(|| grid.display().to_string())?;
            let grid = SweepGrid::parse(&grid_text)?;
            let base = resolve_output_dir(&cfg.output.dir, env_dir);
            let runs = sweep(&template, &grid, &base)?;
            for r in &runs {
                match &r.outcome {
                    Ok(s) => println!("{}: {:?}, {:?}", r.dir.display(), s.status, s.verdict),
                    Err(e) => println!("{}: error: {e}", r.dir.display()),
                }
            }
            println!("index: {}", base.join("sweep.csv").display());
            Ok(sweep_exit_code(&runs))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
