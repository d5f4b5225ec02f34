use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lorenz_thermo::cli::{self, RunOptions};

#[derive(Parser)]
#[command(
    name = "lorenz-thermo",
    version,
    about = "Pressure, cylinders, periodic orbits, and phase scans for Lorenz-like interval maps"
)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (flat key = value sections).
    #[arg(long, global = true, default_value = "run.cfg")]
    config: PathBuf,

    /// Output directory for CSV/JSON reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Also write a JSON mirror of every CSV.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for the parallel reductions (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override the configured depth (cylinder depth or max pressure depth).
    #[arg(long, global = true)]
    depth: Option<usize>,

    /// Recorded in output headers for provenance; reserved for randomized
    /// workflows.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate depth-n cylinders, optionally filtered by a subset.
    Cylinders,
    /// Pressure sequences, the gap verdict, and the endpoint comparison.
    Pressure,
    /// Boundary periodic orbits on either side of the discontinuity.
    Periodic,
    /// Phase-transition scan of the one-parameter potential family.
    Scan,
    /// Boundary-perturbation test battery for a continuous potential.
    Battery,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(threads) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(cli::exit_code::ERROR as u8);
        }
    }
    let opts = RunOptions {
        config_path: args.config,
        out_dir: args.out,
        json: args.json,
        depth: args.depth,
        seed: args.seed,
    };
    let result = match args.command {
        Command::Cylinders => cli::cmd_cylinders(&opts),
        Command::Pressure => cli::cmd_pressure(&opts),
        Command::Periodic => cli::cmd_periodic(&opts),
        Command::Scan => cli::cmd_scan(&opts),
        Command::Battery => cli::cmd_battery(&opts),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code::ERROR as u8)
        }
    }
}
