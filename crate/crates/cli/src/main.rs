mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, OutputArgs};
use commands::CliError;
use output::{Body, Format, Report};

fn emit(report: &Report, out: &OutputArgs, default: Format) -> Result<(), CliError> {
    let text = report.render(out.format.unwrap_or(default));
    match &out.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let size = match &report.body {
                Body::Table { rows, .. } => format!("{} rows", rows.len()),
                Body::Record(r) => format!("{} fields", r.len()),
            };
            println!("{}: {size} written to {}", report.kind, path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    use Format::{Csv, Json};
    match &cli.command {
        Command::Roots(a) => emit(&commands::roots(a)?, &a.output, Csv),
        Command::Eigen(a) => emit(&commands::eigen(a)?, &a.output, Csv),
        Command::Lambda(a) => emit(&commands::lambda(a)?, &a.output, Csv),
        Command::Solve(a) => emit(&commands::solve(a)?, &a.output, Csv),
        Command::Verify(a) => emit(&commands::verify(a)?, &a.output, Json),
        Command::Classify(a) => emit(&commands::classify(a)?, &a.output, Json),
        Command::Scan(a) => emit(&commands::scan(a)?, &a.output, Csv),
        Command::AdjudicateSplitA(a) => emit(&commands::adjudicate(a)?, &a.output, Json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            let line = rendered
                .lines()
                .next()
                .unwrap_or("error: invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}
