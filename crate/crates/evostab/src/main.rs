use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use evostab::{run_config, Kind, Overrides};

/// Runs one scenario and writes summary.json and rows.csv.
#[derive(Parser, Debug)]
#[command(name = "evostab", version)]
struct Cli {
    /// Scenario kind.
    #[arg(value_enum)]
    kind: Kind,
    /// JSON scenario document, e.g. {"builtin": "example39"}.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Seed for sampled pairs; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Solver and quadrature tolerance; overrides the config.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = evostab::init_threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    match run_config(cli.kind, &text, Overrides { seed: cli.seed, tol: cli.tol }, &cli.out) {
        Ok(r) => {
            let failed = r.row_pass.iter().filter(|p| !**p).count();
            println!(
                "{}: {} ({} rows, {} failed) -> {}",
                cli.kind,
                if r.passed() { "pass" } else { "FAIL" },
                r.rows.len(),
                failed,
                cli.out.display()
            );
            for (name, ok) in &r.extra_pass {
                if !ok {
                    println!("  check failed: {name}");
                }
            }
            if r.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
