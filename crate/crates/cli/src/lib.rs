//! `sfsel` command-line front end.
//!
//! Exit codes: 0 success, 1 infeasible instance (or a failing check),
//! 2 usage or parse error, 3 violated solver assumption.

pub mod args;
pub mod bench;
pub mod commands;
pub mod failure;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;

use args::{BenchArgs, Cli, Command, Format};
use commands::Output;
use failure::Failure;

/// Parses `argv`, runs one subcommand and returns the exit code. Reports go
/// to `out` (or the `-o` file), diagnostics to `err`.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(&cli, err) {
        Ok(output) => match emit(&output.body, cli.shared.output.as_deref(), out) {
            Ok(()) => output.code,
            Err(f) => report(f, err),
        },
        Err(f) => report(f, err),
    }
}

fn report(f: Failure, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {f}");
    f.code()
}

fn emit(body: &[u8], path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => write_file(p, body),
        None => out
            .write_all(body)
            .map_err(|e| Failure::Usage(format!("cannot write report: {e}"))),
    }
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, body)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(cli: &Cli, err: &mut dyn Write) -> Result<Output, Failure> {
    let format = cli.shared.format;
    match &cli.command {
        Command::CheckSfm(a) => commands::check_sfm(a, format, err),
        Command::Solve(a) => commands::solve(a, format, err),
        Command::Gen(a) => commands::gen(a),
        Command::Reduce(a) => commands::reduce(a, format, err),
        Command::Bench(a) => bench(a, format, err),
    }
}

fn bench(a: &BenchArgs, format: Format, err: &mut dyn Write) -> Result<Output, Failure> {
    if format == Format::Dot {
        return Err(Failure::Usage("bench writes csv (text) or json".into()));
    }
    let suite = bench::load_suite(a.suite.as_deref())?;
    let opts = bench::BenchOptions {
        jobs: a.jobs,
        timing: !a.no_time,
        cycle_cap: commands::cycle_cap()?,
    };
    let report = bench::run_suite(&suite, &opts)?;
    let csv = bench::to_csv(&report.rows);
    let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
    json.push(b'\n');
    if let Some(p) = &a.csv {
        write_file(p, &csv)?;
    }
    if let Some(p) = &a.json {
        write_file(p, &json)?;
    }
    bench::summary_line(&report, err);
    if report.summary.bound_violations > 0 {
        let _ = writeln!(err, "warning: some ratios exceed their bound");
    }
    Ok(Output {
        body: if format == Format::Json { json } else { csv },
        code: 0,
    })
}
