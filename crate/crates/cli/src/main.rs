mod cli;
mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};

/// Error with the process exit code it maps to: 2 for usage or
/// configuration problems, 3 for failures while running the model.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        Self { code: 2, message: message.to_string() }
    }

    pub fn runtime(message: impl fmt::Display) -> Self {
        Self { code: 3, message: message.to_string() }
    }
}

impl From<npfusion::Error> for CliError {
    fn from(e: npfusion::Error) -> Self {
        use npfusion::Error::*;
        match e {
            Input(_) | Config(_) | Decode(_) => CliError::usage(e),
            Model(_) | Protocol(_) | Io(_) => CliError::runtime(e),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Scenario(a) => commands::scenario(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Roc(a) => commands::roc(a),
        Command::Calibrate(a) => commands::calibrate(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
