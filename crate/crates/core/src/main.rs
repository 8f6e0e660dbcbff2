//! Batch front end: parse a TOML run configuration, dispatch to a solver or
//! the checker, and map outcomes to exit codes (0 success, 2 validation,
//! 3 solver failure, 4 invariant breach).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stringwave::config::RunConfig;
use stringwave::error::Error;
use stringwave::output::RunManifest;
use stringwave::runner;

#[derive(Parser)]
#[command(name = "stringwave", version, about = "Wave-map Cauchy problems on a line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on a space-time grid and record diagnostics
    Evolve(RunArgs),
    /// Solve in characteristic coordinates on the dependence triangle
    Lightcone(RunArgs),
    /// Re-verify a finished run directory from its stored files
    Check {
        /// Run directory containing run.json
        run_dir: PathBuf,
    },
    /// Run a family of related problems and write a summary table
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output_dir from the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record the quadratic-cost a priori functional every step
    #[arg(long)]
    apriori: bool,
    /// Store every Nth snapshot instead of the configured cadence
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Seed for the randomized property samples
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, PathBuf), Error> {
        let mut cfg = RunConfig::from_path(&self.config)?;
        if self.apriori {
            cfg.diagnostics.apriori = true;
        }
        if let Some(n) = self.snapshot_every {
            cfg.diagnostics.snapshot_every = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let dir = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
            .ok_or_else(|| {
                Error::Validation(vec![
                    "output_dir: set it in the config or pass --out".into()
                ])
            })?;
        cfg.output_dir = Some(dir.to_string_lossy().into_owned());
        Ok((cfg, dir))
    }
}

fn finish(manifest: &RunManifest, dir: &Path) -> ExitCode {
    if let Some(f) = &manifest.failure {
        eprintln!("FAILED at t = {}: {}", f.t, f.message);
        eprintln!("partial results in {}", dir.display());
        return ExitCode::from(3);
    }
    println!("ok: results in {}", dir.display());
    ExitCode::SUCCESS
}

fn run() -> Result<ExitCode, Error> {
    match Cli::parse().command {
        Command::Evolve(args) => {
            let (cfg, dir) = args.load()?;
            let manifest = runner::run_evolve(cfg, &dir)?;
            if let Some(e) = &manifest.evolve {
                println!(
                    "evolve: {} steps, relative energy drift {:.3e}",
                    e.steps, e.relative_energy_drift
                );
            }
            Ok(finish(&manifest, &dir))
        }
        Command::Lightcone(args) => {
            let (cfg, dir) = args.load()?;
            let manifest = runner::run_lightcone(cfg, &dir)?;
            if let Some(l) = &manifest.lightcone {
                println!(
                    "lightcone: {} strips, h = {:.4e}, reached t = {}",
                    l.strips.len(),
                    l.h,
                    l.reached_t
                );
            }
            Ok(finish(&manifest, &dir))
        }
        Command::Check { run_dir } => {
            let report = runner::run_check(&run_dir)?;
            if report.breaches.is_empty() {
                println!("check: {} checks passed", report.checks);
                Ok(ExitCode::SUCCESS)
            } else {
                for b in &report.breaches {
                    eprintln!("BREACH: {b}");
                }
                eprintln!(
                    "check: {} of {} checks failed",
                    report.breaches.len(),
                    report.checks
                );
                Ok(ExitCode::from(4))
            }
        }
        Command::Sweep(args) => {
            let (cfg, dir) = args.load()?;
            let manifest = runner::run_sweep(cfg, &dir)?;
            println!("sweep: summary in {}", dir.join("summary.csv").display());
            Ok(finish(&manifest, &dir))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            match &e {
                Error::Validation(errs) => {
                    for msg in errs {
                        eprintln!("invalid config: {msg}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(runner::exit_code_for(&e) as u8)
        }
    }
}
