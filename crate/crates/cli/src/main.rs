mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a, cli.timing),
        Command::Hierarchy(a) => commands::hierarchy(a, cli.timing),
        Command::Witsenhausen(a) => commands::witsenhausen(a, cli.timing),
        Command::Counterexample(a) => commands::counterexample(a),
    };
    let outcome = result.and_then(|o| o.emit(cli.out.as_deref(), cli.quiet).map(|()| o.failure));
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(msg)) => {
            let e = CliError::Assertion(msg);
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot set up {n} worker threads: {e}")))
}
