mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use commands::CliError;

fn run(cli: &Cli) -> Result<output::Report, CliError> {
    match &cli.command {
        Command::Test(cmd) => commands::test(cmd),
        Command::Ci(cmd) => commands::ci(cmd),
        Command::Diagnose(cmd) => commands::diagnose_cmd(cmd),
        Command::Simulate(cmd) => commands::simulate(cmd),
        Command::Enumerate(cmd) => commands::enumerate(cmd),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(CliError::Usage(format!("cannot start thread pool: {e}"))),
        },
        None => run(&cli),
    };

    match outcome {
        Ok(report) => {
            // Human output already lists warnings inline.
            if cli.format != Format::Human {
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
            }
            if let Err(e) = output::emit(&report.render(cli.format), cli.output.as_deref()) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
