use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corr1d::{compare, CliError, RunOptions};

/// Light transmission through atoms in a one-dimensional waveguide.
#[derive(Debug, Parser)]
#[command(name = "corr1d", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long, env = "CORR1D_THREADS")]
        threads: Option<usize>,
        /// Output directory, overriding `output_dir` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Master seed, overriding `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare two output tables and print a JSON report.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            threads,
            output,
            seed,
        } => {
            let summary = corr1d::run(&config, &RunOptions { threads, output, seed })?;
            eprintln!(
                "wrote {} to {} ({} threads)",
                summary.files.join(", "),
                summary.output_dir.display(),
                summary.threads
            );
        }
        Command::Compare { a, b, report } => {
            let r = compare::compare_files(&a, &b)?;
            let json = serde_json::to_string_pretty(&r).expect("report serializes");
            match report {
                Some(path) => std::fs::write(&path, json + "\n").map_err(|source| {
                    CliError::Output(corr1d::output::OutputError::Io { path, source })
                })?,
                None => println!("{json}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("corr1d: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
