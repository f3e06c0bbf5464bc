//! `wustat` — drive simulations, pair statistics, dependence diagnostics,
//! and replicated limit experiments from one TOML configuration.
//!
//! Exit codes: 0 success, 1 for configuration/usage problems, 2 for runtime
//! failures (I/O, encoding).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod manifest;

use commands::Command;
use config::CliError;

#[derive(Parser)]
#[command(
    name = "wustat",
    version,
    about = "Weighted pair-statistic toolkit: simulation, dependence diagnostics, and replicated limit experiments",
    after_help = "Output directory precedence: --out, then $WUSTAT_OUT, then [output] dir in the config, then ./out.\nEvery run writes a manifest.json listing each output file with a content digest."
)]
struct Cli {
    /// Configuration file (TOML), shared by all subcommands
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override every seed in the configuration
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory override
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cap the worker thread count (default: one per core)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful terminations; any
            // other parse problem is a usage error and exits 1.
            use clap::error::ErrorKind;
            let ok = matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("cannot size the worker pool: {e}")))?;
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::invalid("--config PATH is required"))?;
    let (cfg, raw) = config::parse_config(config_path)?;
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os("WUSTAT_OUT").map(PathBuf::from))
        .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = commands::RunContext {
        out_dir,
        seed_override: cli.seed,
        config_digest: manifest::sha256_hex(raw.as_bytes()),
    };
    commands::dispatch(&cli.command, &cfg, &ctx)
}
