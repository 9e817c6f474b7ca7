use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cpsim_core::experiment_harness::{emit_outputs, run, ExperimentConfig, ExperimentKind};
use cpsim_core::Error;

#[derive(Parser)]
#[command(name = "cpsim", version, about = "Compound Poisson simulation of SDEs and singular Volterra equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moments of the singular-drift SDE against the closed form
    SdeMoments(Flags),
    /// Moments of the linear singular Volterra equation against the Neumann series
    SveMoments(Flags),
    /// Strong error slope over an epsilon ladder
    StrongRate(Flags),
    /// Weak error of the Volterra scheme over an epsilon ladder
    WeakRate(Flags),
    /// Poisson epoch and clock moment bounds
    LemmaChecks(Flags),
    /// Fractional Brownian kernel values and rate reports
    KernelTable(Flags),
    /// Neumann-series moment curves
    Oracle(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML configuration; defaults are used for missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Paths per run or rung
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Flags) {
        match self {
            Command::SdeMoments(f) => (ExperimentKind::SdeMoments, f),
            Command::SveMoments(f) => (ExperimentKind::SveMoments, f),
            Command::StrongRate(f) => (ExperimentKind::SdeStrongRate, f),
            Command::WeakRate(f) => (ExperimentKind::SveWeakRate, f),
            Command::LemmaChecks(f) => (ExperimentKind::LemmaChecks, f),
            Command::KernelTable(f) => (ExperimentKind::KernelTable, f),
            Command::Oracle(f) => (ExperimentKind::Oracle, f),
        }
    }
}

const EXIT_INVALID: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

fn configure(kind: ExperimentKind, flags: &Flags) -> Result<ExperimentConfig, Error> {
    let cfg = match &flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(kind),
    };
    let mut cfg = cfg.for_kind(kind)?;
    if let Some(seed) = flags.seed {
        cfg.master_seed = seed;
    }
    if let Some(paths) = flags.paths {
        cfg.n_paths = paths;
    }
    if let Some(out) = &flags.out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let (kind, flags) = Cli::parse().command.split();
    let started = Instant::now();
    let cfg = match configure(kind, &flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e @ Error::Io { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let files = match emit_outputs(&report, &cfg.output) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("{}", report.summary());
    for f in &files {
        println!("wrote {}", f.display());
    }
    let pass = report.passes(&cfg.checks);
    println!(
        "checks {} ({:.2} s total)",
        if pass { "passed" } else { "FAILED" },
        started.elapsed().as_secs_f64()
    );
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}
