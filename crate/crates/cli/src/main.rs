use std::process::ExitCode;

use clap::Parser;
use drnn_cli::{run, Cli, RunConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::from_args(cli.command).and_then(|config| run(&config));
    match result {
        Ok(report) => {
            print!("{}", report.text);
            if report.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("drnn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
