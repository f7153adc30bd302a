use std::process::ExitCode;

use bss_cli::summary::report_summary;
use bss_cli::{run, Cli, ErrorKind, RunError};
use clap::Parser;

fn report(err: &RunError) -> ExitCode {
    eprintln!("error: {err}");
    for d in &err.details {
        eprintln!("  {d}");
    }
    ExitCode::from(err.kind.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(ErrorKind::Validation.exit_code() as u8);
        }
    };
    if let Some(dir) = &cli.summary {
        return match report_summary(dir, cli.mode) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => report(&e),
        };
    }
    let manifest = match cli.manifest() {
        Ok(m) => m,
        Err(msg) => return report(&RunError::validation("arguments", msg)),
    };
    match run(&manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
