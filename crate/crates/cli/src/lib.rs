pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::Parser;

use crate::args::{Cli, Command, Format};
use crate::output::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_EXPECTATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGED: i32 = 3;

/// Parses `argv` and runs one subcommand. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_threads();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("EXPMOMENT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    if let Command::Config(c) = &cli.command {
        return config::run_file(&c.path, cli.output.as_deref());
    }
    let report = commands::execute(&cli.command, cli.bits)?;
    emit(&report, cli.format, cli.output.as_deref(), None)?;
    Ok(if report.nonconverged {
        EXIT_NONCONVERGED
    } else {
        EXIT_OK
    })
}

/// Writes a report to `output` or stdout. Config sections (with a heading) append.
pub(crate) fn emit(report: &Report, format: Format, output: Option<&Path>, heading: Option<&str>) -> Result<()> {
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    let mut buf = Vec::new();
    if let Some(h) = heading {
        writeln!(buf, "# [{h}]")?;
    }
    report.table.write(format, &mut buf)?;
    match output {
        Some(path) => {
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(heading.is_some())
                .write(true)
                .truncate(heading.is_none())
                .open(path)
                .with_context(|| format!("opening {}", path.display()))?;
            f.write_all(&buf)?;
        }
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    if report.nonconverged {
        eprintln!("warning: a solver stopped at its iteration limit");
    }
    Ok(())
}
