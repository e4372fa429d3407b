//! Command-line front end of the polaron laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use polaron::harness::{self, ExperimentConfig, RunMode};

#[derive(Parser)]
#[command(name = "polaron", version, about = "Mean-field Froehlich dynamics: sweeps, comparisons and invariant checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Landau-Pekar evolution with conservation and growth monitors.
    LpEvolve(RunArgs),
    /// Exact many-body evolution with mean-field observables, one run per N.
    ExactEvolve(RunArgs),
    /// Truncated Bogoliubov evolution, one run per cutoff M.
    BogEvolve(RunArgs),
    /// Full pipeline: exact and Bogoliubov runs, corrected states, distances and rate fits.
    Compare(RunArgs),
    /// Run invariant batteries at pinned sizes.
    Check {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Directory for the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: &RunArgs, mode: RunMode) -> Result<bool> {
    let cfg = ExperimentConfig::from_file(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let out = args.out.clone().unwrap_or_else(|| cfg.base_dir.join(&cfg.output.dir));
    log::info!("running {mode:?} with {} workers", harness::workers());
    let bundle = harness::run(&cfg, mode)?;
    bundle.write(&out).with_context(|| format!("writing {}", out.display()))?;
    print!("{}", bundle.report_lines());
    println!("{} -> {}", if bundle.summary.pass { "pass" } else { "FAIL" }, out.display());
    Ok(bundle.summary.pass)
}

fn check(suite: &str, out: Option<&PathBuf>) -> Result<bool> {
    let names: Vec<&str> = if suite == "all" { harness::SUITES.to_vec() } else { vec![suite] };
    let mut reports = Vec::new();
    for name in names {
        let r = harness::check(name)?;
        print!("{}", r.lines());
        reports.push(r);
    }
    if let Some(dir) = out {
        let json = serde_json::to_string_pretty(&reports)? + "\n";
        harness::io::write_tree_atomic(dir, &[(PathBuf::from("check.json"), json)])?;
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::LpEvolve(a) => run(a, RunMode::LpEvolve),
        Command::ExactEvolve(a) => run(a, RunMode::ExactEvolve),
        Command::BogEvolve(a) => run(a, RunMode::BogEvolve),
        Command::Compare(a) => run(a, RunMode::Compare),
        Command::Check { suite, out } => check(suite, out.as_ref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
