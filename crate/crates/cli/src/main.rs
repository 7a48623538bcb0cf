use std::io::{ErrorKind as IoKind, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use ssrbell_cli::config::Cli;
use ssrbell_cli::{run, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let outcome = RunConfig::from_cli(cli).and_then(|config| {
        let out = run(&config)?;
        if config.params.out.is_none() {
            // a closed pipe (e.g. `| head`) is not an error
            match std::io::stdout().lock().write_all(out.rendered.as_bytes()) {
                Err(e) if e.kind() != IoKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
        Ok(out)
    });
    match outcome {
        Ok(out) if out.all_pass => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("error: one or more claims failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
