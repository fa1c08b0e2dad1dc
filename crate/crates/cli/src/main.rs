mod args;
mod commands;
mod output;
mod source;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::EXIT_ERROR;
use output::{render, Meta};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Drift(a) => commands::drift(a),
        Command::Classify(a) => commands::classify(a),
        Command::Efficiency(a) => commands::efficiency(a),
        Command::Table(a) => commands::table(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    let run = match run {
        Ok(run) => run,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let meta = Meta { command: run.command, model: &run.model, params: &run.params };
    match render(&run.report, run.format, &meta) {
        Ok(text) => {
            // A closed pipe is not worth a panic.
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    if let Some(msg) = &run.complaint {
        eprintln!("{}: {msg}", if run.status == EXIT_ERROR { "error" } else { "note" });
    }
    ExitCode::from(run.status)
}
