use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use roughbound::config::parse_levels;
use roughbound::studies::{
    cocycle_study, convergence_study, invariants_study, sample_study, solve_study, stability_study, StudyOutput,
};
use roughbound::{Error, RunConfig};

/// Exit status when every study ran but at least one check failed.
const CHECK_FAILED: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "roughbound", version, about = "Rough boundary noise studies on the unit interval")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat TOML configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Existing directory receiving the CSV artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Dyadic level range `a..b` (inclusive).
    #[arg(long, global = true)]
    levels: Option<String>,

    /// Size of the worker pool used to fan out over seeds and perturbations.
    #[arg(long, env = "ROUGHBOUND_THREADS", hide_env_values = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample a fractional Brownian driver and its lift.
    Sample,
    /// Solve the configured problem.
    Solve,
    /// Dyadic sewing convergence over several seeds.
    Convergence,
    /// Cocycle defect under grid refinement.
    Cocycle,
    /// Response to driver and initial-datum perturbations.
    Stability,
    /// Structural self-checks.
    Invariants,
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(levels) = &cli.levels {
        parse_levels(levels)?;
        cfg.levels = levels.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<StudyOutput, Error> {
    let cfg = load(cli)?;
    if !cli.out.is_dir() {
        return Err(Error::Io {
            path: cli.out.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        });
    }
    let output = match cli.command {
        Command::Sample => sample_study(&cfg)?,
        Command::Solve => solve_study(&cfg)?,
        Command::Convergence => convergence_study(&cfg)?,
        Command::Cocycle => cocycle_study(&cfg)?,
        Command::Stability => stability_study(&cfg)?,
        Command::Invariants => invariants_study(&cfg)?,
    };
    output.write_to(&cli.out)?;
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads.filter(|n| *n > 0) {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(output) => {
            print!("{}", output.summary());
            if output.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(CHECK_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
