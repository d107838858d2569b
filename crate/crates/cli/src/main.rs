mod args;
mod commands;
mod error;
mod grid;
mod svg;
mod table;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::error::{usage, CliResult};

/// OTCONC_THREADS wins over --threads; without either rayon uses every core.
fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let threads = match std::env::var("OTCONC_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("OTCONC_THREADS: cannot parse '{v}'")))?,
        ),
        Err(_) => flag,
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = configure_threads(cli.threads).and_then(|()| commands::run(cli.command));
    match outcome {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
