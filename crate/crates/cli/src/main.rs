use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match ocp_cli::run(ocp_cli::Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
