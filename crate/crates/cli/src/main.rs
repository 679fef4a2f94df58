use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use spectral_dp::args::Cli;
use spectral_dp::{execute, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli.command).and_then(|rendered| match &rendered.out {
        Some(path) => {
            std::fs::write(path, &rendered.bytes).map_err(|source| CliError::Io { path: path.clone(), source })
        }
        None => std::io::stdout()
            .write_all(&rendered.bytes)
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spectral-dp {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
