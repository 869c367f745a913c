//! `opineq` command-line runner. Every subcommand writes one table (CSV or
//! JSON) carrying its parameters, seed, version and per-column provenance.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use serde_json::json;

use commands::*;
use report::{Format, Report};

#[derive(Debug, Parser)]
#[command(name = "opineq", version, about = "Numerical checks for |x||p| + |p||x| and related bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for randomized experiments; recorded in every output.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Flat key=value file of long flag names. Command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// gamma_d and 2 alpha_d gamma_d over a list of dimensions.
    Gamma(GammaArgs),
    /// Extrapolated relativistic form over a trial-function grid.
    Positivity(PositivityArgs),
    /// 2D hydrogen levels with degeneracies.
    Hydrogen(HydrogenArgs),
    /// Critical coupling of |p| - nu/|x| in 2D.
    Critical(CriticalArgs),
    /// Kato inequality experiment on a lattice.
    Kato(KatoArgs),
    /// Excess-charge bounds for a quantum dot.
    Bounds(BoundsArgs),
}

const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn set_threads() -> Result<()> {
    if let Ok(v) = std::env::var("OPINEQ_THREADS") {
        let n: usize = v.parse().with_context(|| format!("OPINEQ_THREADS={v} is not a thread count"))?;
        if n == 0 {
            anyhow::bail!("OPINEQ_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn parse_args() -> Result<Cli> {
    let args: Vec<String> = std::env::args().collect();
    let args = match config::config_path(&args) {
        Some(path) => {
            let pairs = config::read_pairs(path.as_ref())?;
            config::merge(&Cli::command(), args, &pairs)?
        }
        None => args,
    };
    Ok(Cli::try_parse_from(args).unwrap_or_else(|e| e.exit()))
}

fn run(cli: &Cli) -> Result<Report> {
    let name = match &cli.command {
        Command::Gamma(_) => "gamma",
        Command::Positivity(_) => "positivity",
        Command::Hydrogen(_) => "hydrogen",
        Command::Critical(_) => "critical",
        Command::Kato(_) => "kato",
        Command::Bounds(_) => "bounds",
    };
    let mut report = Report::new(name, cli.seed);
    match &cli.command {
        Command::Gamma(a) => gamma_cmd(a, &mut report)?,
        Command::Positivity(a) => positivity_cmd(a, &mut report)?,
        Command::Hydrogen(a) => hydrogen_cmd(a, &mut report)?,
        Command::Critical(a) => critical_cmd(a, &mut report)?,
        Command::Kato(a) => kato_cmd(a, cli.seed, &mut report)?,
        Command::Bounds(a) => bounds_cmd(a, &mut report)?,
    }
    Ok(report)
}

fn write_report(cli: &Cli, report: &Report) -> Result<()> {
    match &cli.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            report.write(cli.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report.write(cli.format, &mut lock)?;
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<opineq::Error>() {
        Some(opineq::Error::InputDomain(_) | opineq::Error::Config(_) | opineq::Error::Singular(_)) => EXIT_USAGE,
        Some(_) => EXIT_NUMERICAL,
        None => EXIT_USAGE,
    }
}

fn failure_record(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "status": "failed", "kind": kind, "message": message, "exit_code": code }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match parse_args() {
        Ok(c) => c,
        Err(e) => return failure_record("usage", format!("{e:#}"), EXIT_USAGE),
    };
    if let Err(e) = set_threads() {
        return failure_record("usage", format!("{e:#}"), EXIT_USAGE);
    }
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == EXIT_USAGE { "input" } else { "numerical" };
            return failure_record(kind, format!("{e:#}"), code);
        }
    };
    if let Err(e) = write_report(&cli, &report) {
        return failure_record("io", format!("{e:#}"), EXIT_USAGE);
    }
    let failed = report.failed();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}", json!({ "status": "failed", "kind": "assertion", "failed": failed, "exit_code": EXIT_ASSERTION }));
        ExitCode::from(EXIT_ASSERTION)
    }
}
