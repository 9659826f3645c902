use std::process::ExitCode;

use clap::Parser;
use threshold_lab_cli::config::{Cli, Command};
use threshold_lab_cli::error::{CliError, CliResult};
use threshold_lab_cli::run;

const THREADS_VAR: &str = "THRESHOLD_LAB_THREADS";

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Parse(format!("{THREADS_VAR}={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Other(e.to_string()))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    init_threads()?;
    let text = match &cli.command {
        Command::Info(a) => run::info(a)?,
        Command::Weights(a) => run::weights(a)?,
        Command::Curve(a) => run::curve(a)?,
        Command::Bounds(a) => run::bounds(a)?,
        Command::Width(a) => run::width(a)?,
        Command::Exit(a) => run::exit(a)?,
        Command::Partition(a) => run::partition(a)?,
        Command::Verify(a) => {
            let (json, passed) = run::verify(a)?;
            print!("{json}");
            if !passed {
                return Err(CliError::VerifyFailed(format!("suite {} has a counterexample", a.suite)));
            }
            return Ok(());
        }
    };
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("threshold-lab {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
