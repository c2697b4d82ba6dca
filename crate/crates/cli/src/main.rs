//! Command-line runner for convergence experiments and the acceptance suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use resonant_wigner::harness::run::{SeriesReport, CSV_FILE, REPORT_FILE, SUMMARY_FILE};
use resonant_wigner::harness::{
    criteria, rerender, run_experiment, summarize, write_run, ExperimentConfig, RunOptions, Summary,
};

const EXIT_TOLERANCE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "resonant-wigner",
    version,
    about = "Finite-h Wigner and resonance experiments on flat tori"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json, results.csv and summary.json.
    Run {
        config: PathBuf,
        /// Run directory; defaults to the config `output` field, then `runs/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Multiplies upper thresholds and divides lower thresholds.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Run the full acceptance and property suite.
    Check,
    /// Sweep the schedule and fit rates; prints the summary without writing files.
    Converge {
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Re-render results.csv and summary.json from a run directory's report.json.
    Report { run_dir: PathBuf },
}

fn main() -> ExitCode {
    ExitCode::from(execute(Cli::parse()))
}

/// Runs one command and returns its exit code.
fn execute(cli: Cli) -> u8 {
    exit_code(dispatch(cli))
}

fn exit_code(outcome: anyhow::Result<bool>) -> u8 {
    match outcome {
        Ok(true) => 0,
        Ok(false) => EXIT_TOLERANCE,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}

/// `Ok(pass)` when the command ran to completion; `Err` for unusable input.
fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
            tol_scale,
        } => run(&config, out, RunOptions { threads, tol_scale }),
        Command::Check => Ok(check()),
        Command::Converge {
            config,
            threads,
            tol_scale,
        } => converge(&config, RunOptions { threads, tol_scale }),
        Command::Report { run_dir } => report(&run_dir),
    }
}

fn print_series(series: &[SeriesReport]) {
    for s in series {
        let tag = if s.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} {} [{}/{}] fit {:?}",
            s.quantity, s.symbol_id, s.window_id, s.fit
        );
        for c in s.checks.iter().filter(|c| !c.pass) {
            println!("    {}: {}", c.name, c.detail);
        }
    }
}

fn run(config: &Path, out: Option<PathBuf>, opts: RunOptions) -> anyhow::Result<bool> {
    let cfg = ExperimentConfig::from_path(config)?;
    let dir = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("runs").join(&cfg.name));
    let report = run_experiment(&cfg, &opts)?;
    write_run(&report, &dir).with_context(|| format!("writing {}", dir.display()))?;
    print_series(&report.series);
    println!(
        "wrote {}, {} and {} to {}",
        REPORT_FILE,
        CSV_FILE,
        SUMMARY_FILE,
        dir.display()
    );
    Ok(report.pass)
}

fn check() -> bool {
    let mut outcomes = Vec::new();
    for criterion in criteria() {
        let outcome = criterion.run();
        println!("{outcome}");
        outcomes.push(outcome);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed} of {} passed", outcomes.len());
    passed == outcomes.len()
}

fn converge(config: &Path, opts: RunOptions) -> anyhow::Result<bool> {
    let summary = sweep(config, opts)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(summary.pass)
}

fn sweep(config: &Path, opts: RunOptions) -> anyhow::Result<Summary> {
    let cfg = ExperimentConfig::from_path(config)?;
    Ok(summarize(&run_experiment(&cfg, &opts)?))
}

fn report(dir: &Path) -> anyhow::Result<bool> {
    let report =
        rerender(dir).with_context(|| format!("reading {}", dir.join(REPORT_FILE).display()))?;
    print_series(&report.series);
    Ok(report.pass)
}
