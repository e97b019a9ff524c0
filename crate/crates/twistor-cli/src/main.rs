mod commands;
mod config;
mod error;
mod output;
mod verify;

use clap::Parser;
use config::{Cli, Command, RunConfig};
use error::CliError;
use twistor_core::exec::Execution;

/// Environment variable capping the worker count.
const THREADS_ENV: &str = "TODA_TWISTOR_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Invalid(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("{THREADS_ENV}: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    log::debug!("{THREADS_ENV}={n} ignored in a sequential build");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = RunConfig::resolve(cli.command, cli.flags)?;
    let exec = Execution::default();
    let out = match cfg.command {
        Command::Integrate => commands::integrate_cmd(&cfg)?,
        Command::Scan => commands::scan_cmd(&cfg, exec)?,
        Command::Classify => commands::classify_cmd(&cfg)?,
        Command::PdeCheck => commands::pde_check_cmd(&cfg, exec)?,
        Command::Reconstruct => commands::reconstruct_cmd(&cfg)?,
        Command::Verify => verify::verify_cmd(&cfg, exec)?,
        Command::Flowlines => commands::flowlines_cmd(&cfg, exec)?,
    };
    output::write(&cfg, &out)?;
    match out.failure {
        Some(f) => Err(CliError::Property(f)),
        None => Ok(()),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match Cli::try_parse() {
        Ok(cli) => match run(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    };
    std::process::exit(code);
}
