//! `ttinv`: invert, solve and certify Kronecker-sum systems in TT format.
//!
//! Exit codes: 0 success, 2 usage, 3 numeric failure, 4 resource cap.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Overrides;
use report::RunReport;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Resource(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ttinv", version, about = "Tensor-train inversion of Kronecker-sum operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML problem description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Newton stopping tolerance on the relative residual.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Relative accuracy of every TT rounding.
    #[arg(long = "round-eps", global = true)]
    round_eps: Option<f64>,
    #[arg(long = "max-rank", global = true)]
    max_rank: Option<usize>,
    /// Largest dense tensor or matrix the run may materialize.
    #[arg(long = "dense-cap", global = true)]
    dense_cap: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; TTINV_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Compute the TT inverse of the configured operator.
    Invert,
    /// Solve or time-step the configured model problem and write an error series.
    Solve,
    /// Verify the disk condition and report decay factors and rank bounds.
    Certify,
    /// Singular values of a matricized Hadamard inverse next to the certified envelope.
    SvdDecay,
    /// Check dense and file round trips of a TT tensor.
    Roundtrip,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let cfg = config::load(path)?;
    let overrides = Overrides {
        tol: cli.tol,
        round_eps: cli.round_eps,
        max_rank: cli.max_rank,
        dense_cap: cli.dense_cap,
        seed: cli.seed,
        threads: cli.threads,
    };
    let settings = config::resolve(cfg, &overrides, std::env::var("TTINV_THREADS").ok())?;
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    let mut report = RunReport::new(std::env::args().collect(), settings);
    let result = match cli.command {
        Command::Invert => commands::invert(&mut report, &cli.out),
        Command::Solve => commands::solve(&mut report, &cli.out),
        Command::Certify => commands::certify(&mut report, &cli.out),
        Command::SvdDecay => commands::svd_decay(&mut report, &cli.out),
        Command::Roundtrip => commands::roundtrip(&mut report, &cli.out),
    };
    if let Err(e) = &result {
        report.metric("error", e.to_string());
    }
    report.write(&cli.out)?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ttinv: {e}");
            ExitCode::from(e.code())
        }
    }
}
