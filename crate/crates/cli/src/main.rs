//! `hetshock`: runs the laboratory's experiments from a config file.
//!
//! Exit status: 0 when every asserted criterion passes, 1 when any fails,
//! 2 on configuration or runtime errors.

mod config;
mod run;
mod sweep;

use clap::{Parser, Subcommand};
use config::{Experiment, Overrides, RawConfig, RunConfig};
use run::{RunError, RunManifest};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hetshock", version, about = "Scalar conservation laws with heterogeneous convex flux")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunArgs {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override `grid.n_cells`.
    #[arg(long)]
    n_cells: Option<usize>,
    /// Override `run.horizon`.
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve initial data and write snapshots.
    Simulate(RunArgs),
    /// Integrate characteristics from a lattice of starting points.
    Characteristics(RunArgs),
    /// Detect emergence of the simple shock.
    Emergence(RunArgs),
    /// Relative-entropy stability of the simple shock.
    Stability(RunArgs),
    /// L² growth under a negatively heterogeneous flux.
    Negcheck(RunArgs),
    /// Hamilton–Jacobi correspondence under refinement.
    HjCheck(RunArgs),
    /// Check the structural assumptions of a flux.
    ValidateFlux(RunArgs),
    /// Run a configuration for each value of one key.
    Sweep(RunArgs),
}

const OK: u8 = 0;
const FAILED: u8 = 1;
const ERROR: u8 = 2;

fn load(args: &RunArgs) -> Result<RawConfig, String> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| format!("reading {}: {e}", args.config.display()))?;
    RawConfig::parse(&text).map_err(|e| e.to_string())
}

fn overrides(args: &RunArgs) -> Overrides {
    Overrides {
        n_cells: args.n_cells,
        horizon: args.horizon,
    }
}

fn report(m: &RunManifest) {
    for c in &m.criteria {
        println!("{}", c.line());
    }
    println!(
        "{} `{}` done in {:.2}s, {} artifacts",
        m.experiment,
        m.label,
        m.wall_clock_s,
        m.artifacts.len()
    );
}

fn single(experiment: Experiment, args: &RunArgs) -> u8 {
    let result = load(args).map_err(|e| e.to_string()).and_then(|mut raw| {
        overrides(args).apply(&mut raw);
        let cfg = RunConfig::from_raw(&raw, Some(experiment)).map_err(|e| e.to_string())?;
        run::run(&cfg, &args.out).map_err(|e: RunError| e.to_string())
    });
    match result {
        Ok(m) => {
            report(&m);
            if m.pass {
                OK
            } else {
                FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ERROR
        }
    }
}

fn sweep(args: &RunArgs) -> u8 {
    let raw = match load(args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ERROR;
        }
    };
    match sweep::sweep(raw, overrides(args), &args.out) {
        Ok(runs) => {
            let mut code = OK;
            for r in &runs {
                match &r.result {
                    Ok(m) => {
                        report(m);
                        if !m.pass {
                            code = FAILED;
                        }
                    }
                    Err(e) => {
                        eprintln!("error in `{}` ({}): {e}", r.label, r.dir.display());
                        code = FAILED;
                    }
                }
            }
            println!("summary: {}", args.out.join("summary.csv").display());
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            ERROR
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Simulate(a) => single(Experiment::Simulate, a),
        Command::Characteristics(a) => single(Experiment::Characteristics, a),
        Command::Emergence(a) => single(Experiment::Emergence, a),
        Command::Stability(a) => single(Experiment::Stability, a),
        Command::Negcheck(a) => single(Experiment::Negcheck, a),
        Command::HjCheck(a) => single(Experiment::HjCheck, a),
        Command::ValidateFlux(a) => single(Experiment::ValidateFlux, a),
        Command::Sweep(a) => sweep(a),
    };
    ExitCode::from(code)
}
