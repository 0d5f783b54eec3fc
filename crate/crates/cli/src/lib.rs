//! Command-line driver for the digital population pipeline.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use digipop::harness::{Config, Pipeline};
use digipop::Error;
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "digipop",
    version,
    about = "Simulate, aggregate and evaluate digital populations"
)]
struct Cli {
    /// Configuration document (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Root of the `reports/`, `cache/` and `sweeps/` outputs.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the configured datasets.
    Ingest,
    /// Precompute reference decisions through the response cache.
    Reference,
    /// Train the belief generator.
    Train,
    /// Generate digital-population decisions on the evaluation problems.
    Simulate,
    /// Aggregate simulated decisions with every configured method.
    Aggregate,
    /// Compute metrics and diagnostics into `reports/report.json`.
    Evaluate,
    /// Run the factorial simulation study.
    Sweep,
    /// Render report tables and plot data as CSV.
    Report,
}

/// Parse `args` (including the program name), run one step and return the
/// process exit code. Summaries go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let Some(config_path) = &cli.config else {
        let _ = writeln!(
            err,
            "error: --config <PATH> is required\n\nUsage: digipop --config <PATH> <COMMAND>"
        );
        return EXIT_USAGE;
    };
    let config = match Config::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(
                err,
                "error: cannot load config {}: {e}",
                config_path.display()
            );
            return EXIT_DATA;
        }
    };
    match execute(&cli, config) {
        Ok(summary) => {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn execute(cli: &Cli, config: Config) -> Result<serde_json::Value, Error> {
    let p = Pipeline::new(config, cli.seed, &cli.out_dir)?;
    Ok(match cli.command {
        Command::Ingest => serde_json::to_value(p.ingest()?).expect("summary serializes"),
        Command::Reference => {
            let refs = p.reference()?;
            json!({"problems": refs.len(), "output": p.report_path("references.json")})
        }
        Command::Train => {
            let net = p.train()?;
            json!({"parameters": net.num_params(), "output": p.report_path("model.json")})
        }
        Command::Simulate => {
            let sim = p.simulate()?;
            json!({
                "participants": sim.participants.len(),
                "problems": sim.problems.len(),
                "output": p.report_path("simulation.json"),
            })
        }
        Command::Aggregate => {
            let agg = p.aggregate()?;
            json!({"problems": agg.values.len(), "output": p.report_path("aggregated.json")})
        }
        Command::Evaluate => {
            let report = p.evaluate()?;
            json!({"metrics": report.metrics, "output": p.report_path("report.json")})
        }
        Command::Sweep => {
            let result = p.sweep()?;
            let failed = result.cells.iter().filter(|c| c.failed).count();
            json!({
                "cells": result.cells.len(),
                "failed_cells": failed,
                "output": cli.out_dir.join("sweeps").join("sweep.json"),
            })
        }
        Command::Report => json!({"written": p.report()?}),
    })
}
