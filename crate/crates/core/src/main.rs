use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use alphaloss::experiment::{run, summarize, write_summary_csv, ExperimentConfig};
use alphaloss::Result;

/// Environment variable that overrides the config's output directory.
const OUT_ENV: &str = "ALPHALOSS_OUT";

#[derive(Parser)]
#[command(name = "alphaloss", version, about = "α-loss boosting and linear-model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (beats ALPHALOSS_OUT and the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Aggregate a results.csv into per-cell means and 95% intervals.
    Summarize {
        results: PathBuf,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out_dir = out
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run(&cfg, &out_dir, jobs)?;
            eprintln!("{} rows written to {}", outcome.rows, outcome.out_dir.display());
            Ok(())
        }
        Command::Summarize { results, out } => {
            let aggs = summarize(&results)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path)
                        .map_err(|e| alphaloss::Error::Io { path: path.clone(), source: e })?;
                    write_summary_csv(&aggs, file)
                }
                None => write_summary_csv(&aggs, std::io::stdout().lock()),
            }
        }
    }
}
