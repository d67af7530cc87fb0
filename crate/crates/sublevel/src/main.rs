use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sublevel::experiment::{self, Overrides};

/// Benchmark runner for the multilevel low-rank Newton library.
#[derive(Parser)]
#[command(name = "sublevel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method on one problem and persist traces.
    Run {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides config and SUBLEVEL_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for parallel sections.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Sweep the coarse dimension and tabulate saddle-escape probabilities.
    Escape {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Execute the theorem-probe suite on built-in synthetic problems.
    Verify {
        /// Emit machine-readable probe results.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => experiment::cmd_run(&config, &Overrides { out, seed, threads }),
        Command::Escape {
            config,
            out,
            seed,
            threads,
        } => experiment::cmd_escape(&config, &Overrides { out, seed, threads }),
        Command::Verify { json } => experiment::cmd_verify(json),
    };
    ExitCode::from(code as u8)
}
