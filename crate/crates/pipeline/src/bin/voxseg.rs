use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use voxseg_pipeline::commands::{evaluate_to, generate, sweep, sweep_csv, write_text};
use voxseg_pipeline::{run_config_file, EvalOptions, Result};

#[derive(Parser)]
#[command(name = "voxseg", version, about = "Nucleus segmentation pipelines and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark from a parameter manifest.
    Generate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Execute the pipeline named by a run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score result files against a benchmark.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Largest displacement linked by the tracker.
        #[arg(long, default_value_t = 8.0)]
        max_dist: f64,
    },
    /// Re-run a pipeline for several values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `item_id.Key`
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 8.0)]
        max_dist: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { params, out, seed } => {
            let ds = generate(&params, &out, seed)?;
            println!("generated {} frame(s) in {}", ds.frames.len(), out.display());
        }
        Command::Run { config } => {
            let r = run_config_file(&config)?;
            println!("ran {} item(s), wrote {} file(s)", r.execution.trace.len(), r.written.len());
        }
        Command::Evaluate { truth, result, report, max_dist } => {
            let r = evaluate_to(&truth, &result, &report, &EvalOptions { max_dist })?;
            println!("evaluated {} result row(s)", r.rows.len());
        }
        Command::Sweep { config, param, values, report, truth, max_dist } => {
            let rows = sweep(&config, &param, &values, truth.as_deref(), &EvalOptions { max_dist })?;
            write_text(&report, &sweep_csv(&param, &rows))?;
            println!("swept {} value(s)", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::FAILURE
        }
    }
}
