//! `gfc`: genus, monodromy, ends and hyperelliptic models of generalized Fermat covers.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Output, Overrides};
use config::{RunConfig, DEFAULT_CONFIG};

#[derive(Debug, Parser)]
#[command(
    name = "gfc",
    version,
    about = "Finite truncations of generalized Fermat covers"
)]
struct Cli {
    /// JSON configuration; the shipped default is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Truncation level `n`.
    #[arg(long, global = true)]
    level: Option<usize>,
    /// Identification tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Drop the exponential convergence factors of the Weierstrass products.
    #[arg(long, global = true)]
    bare_product: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Genus from the closed formula and from the computed monodromy.
    Genus,
    /// Loop monodromy around every branch point.
    Monodromy,
    /// Genus, ends and ends of infinite genus.
    Ends {
        /// Write the gluing graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Synthesize and check a hyperelliptic model.
    Hyper {
        /// Character bits for `q_1..q_N`, e.g. `101`.
        #[arg(long)]
        bits: Option<String>,
        /// Write `|rhs|` over a grid as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Verify,
}

fn load(cli: &Cli, bits: Option<String>) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let mut cfg = RunConfig::parse(&text).map_err(CliError::Config)?;
    let overrides = Overrides {
        seed: cli.seed,
        depth: cli.depth,
        level: cli.level,
        tol: cli.tol,
        bare_product: cli.bare_product,
        bits,
    };
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Genus => commands::cmd_genus(&load(cli, None)?),
        Command::Monodromy => commands::cmd_monodromy(&load(cli, None)?),
        Command::Ends { dot } => commands::cmd_ends(&load(cli, None)?, dot.as_deref()),
        Command::Hyper { bits, csv } => {
            commands::cmd_hyper(&load(cli, bits.clone())?, csv.as_deref())
        }
        Command::Verify => commands::cmd_verify(&load(cli, None)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Output { report, code }) => {
            let text = serde_json::to_string_pretty(&report).expect("reports serialize");
            // a closed pipe downstream is not an error of the command
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if code != 0 {
                if let Some(failed) = report.get("failed") {
                    eprintln!("failed invariants: {failed}");
                }
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
