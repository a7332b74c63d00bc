use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kse::config::parse_config;
use kse::run::{self, RunOptions};
use kse::KseError;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser, Debug)]
#[command(name = "kse", version, about = "Chemotaxis–Euler pseudo-spectral solver and estimate auditor")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `out.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,

    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = "KSE_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Integrate and write the diagnostics time series and snapshots.
    Simulate,
    /// Simulate, then run every auditor and write a pass/fail summary.
    Audit,
    /// Picard iteration of the linearised system on a short window.
    Picard,
    /// One run per value of the swept parameter plus a comparison table.
    Sweep,
    /// Temporal and spatial refinement studies.
    Convergence,
}

fn execute(cli: &Cli) -> Result<(), KseError> {
    let path = cli.config.as_ref().ok_or_else(|| KseError::Config {
        line: 0,
        message: "--config is required".into(),
    })?;
    let text = fs::read_to_string(path).map_err(|e| KseError::Io {
        path: path.clone(),
        source: e,
    })?;
    let config = parse_config(&text)?;
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cli.out.clone().unwrap_or_else(|| config.out.dir.clone());
    let opts = RunOptions { quiet: cli.quiet };
    match cli.command {
        Command::Simulate => run::run_simulate(&config, &out, &opts).map(|_| ()),
        Command::Audit => run::run_audit(&config, &out, &opts).map(|_| ()),
        Command::Picard => run::run_picard(&config, &out, &opts).map(|_| ()),
        Command::Sweep => run::run_sweep(&config, &out, &opts).map(|_| ()),
        Command::Convergence => run::run_convergence(&config, &out, &opts).map(|_| ()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
