//! `llproj` command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or invalid parameters, 3 for
//! numerical failures. Failures print a JSON record on stderr.

mod args;
mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::args::Cli;
use crate::commands::CliError;
use crate::output::error_record;

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", error_record(err.kind(), &err.to_string()));
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let parsed = args::with_config(std::env::args_os().collect()).and_then(Cli::try_parse_from);
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Some(threads) = cli.threads {
        if threads == 0 {
            return fail(&CliError::Usage("thread count must be positive".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return fail(&CliError::Usage(format!("cannot configure thread pool: {e}")));
        }
    }

    let start = Instant::now();
    let (report, path) = match commands::run(&cli.command) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let runtime_ms = start.elapsed().as_millis();

    let written = match path {
        Some(path) => File::create(&path).and_then(|f| {
            let mut w = BufWriter::new(f);
            report.write(cli.format, runtime_ms, &mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report.write(cli.format, runtime_ms, &mut lock)
        }
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&CliError::Io(e)),
    }
}
