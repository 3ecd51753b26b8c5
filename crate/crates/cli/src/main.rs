use std::process::ExitCode;

use cil_cli::cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let message = err.kind().to_string();
            eprintln!("{}", cil_cli::CliError::Config(format!("{message}: {}", err.to_string().lines().next().unwrap_or(""))).machine_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.machine_line());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
