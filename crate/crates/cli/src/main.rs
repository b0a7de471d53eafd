use std::process::ExitCode;

use clap::Parser;
use greedy_colloc_cli::{execute, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, sweep) = match &cli.command {
        Command::Run(args) => (args, false),
        Command::Sweep(args) => (args, true),
    };
    match execute(args, sweep) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.blowup {
                println!("blow-up recorded in the manifest");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
