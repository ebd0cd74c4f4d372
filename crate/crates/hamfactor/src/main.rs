use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hamfactor::cli;

/// Factor compactly supported Hamiltonian diffeomorphisms of R^2n into
/// three autonomous pieces and verify the result.
#[derive(Parser)]
#[command(name = "hamfactor", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact word-algebra verification of the factorization identity.
    Identity {
        /// Number of input factors.
        #[arg(long)]
        m: usize,
        /// Write the full reduction trace to this file (one rewrite per line).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build the factorization plan and write its summary as JSON.
    Factorize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full numeric verification: composition, displacement, Calabi report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calabi values of the plan, optionally balanced to Calabi zero.
    Calabi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// CSV orbit of a point under one of the plan's words.
    Trace {
        #[arg(long)]
        config: PathBuf,
        /// Start point, comma-separated: "x1,y1,...,xn,yn".
        #[arg(long)]
        point: String,
        /// Which word to trace: f, A1, A2, A3, or h.
        #[arg(long)]
        which: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = match &args.command {
        Command::Identity { m, trace } => cli::cmd_identity(*m, trace.as_deref()),
        Command::Factorize { config, out } => cli::cmd_factorize(config, out),
        Command::Verify { config, out } => cli::cmd_verify(config, out),
        Command::Calabi { config, out } => cli::cmd_calabi(config, out),
        Command::Trace {
            config,
            point,
            which,
            out,
        } => cli::cmd_trace(config, point, which, out),
    };
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(cli::exit_code(&result))
}
