use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use triwell_cli::config::PRECISION_ENV;
use triwell_cli::output::write_report;
use triwell_cli::{run, Cli, CliError, FileConfig, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("triwell: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let env = std::env::var(PRECISION_ENV).ok();
    let cfg = RunConfig::resolve(cli, file, env.as_deref())?;
    let report = run(&cfg)?;
    let out: Box<dyn Write> = match &cfg.output {
        Some(path) => Box::new(
            File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    write_report(&report, &cfg, BufWriter::new(out))?;
    for note in &report.notes {
        eprintln!("{note}");
    }
    match report.problem {
        Some(p) => Err(p),
        None => Ok(()),
    }
}
