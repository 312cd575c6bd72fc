use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mimicry_cli::{cmd_baselines, cmd_mmm, cmd_pbcm, cmd_simulate, with_thread_cap, CliError};

/// Simulation-based model selection by multi-model mimicry.
#[derive(Parser)]
#[command(name = "mimicry", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-model mimicry with discriminant classification.
    Mmm {
        #[arg(long)]
        config: PathBuf,
    },
    /// Pairwise parametric bootstrap cross-fitting of two models.
    Pbcm {
        #[arg(long)]
        config: PathBuf,
    },
    /// Draw a dataset from a parameterized family, one value per line.
    Simulate {
        #[arg(long)]
        family: String,
        /// Parameter values, e.g. `--params 1,5` or `--params 1 5`.
        #[arg(long, num_args = 1.., value_delimiter = ',', allow_negative_numbers = true)]
        params: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Williams' simulated λ and, for declared nested models, Wilks' test.
    Baselines {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    with_thread_cap(|| match cli.command {
        Command::Mmm { config } => {
            let r = cmd_mmm(&config)?;
            for (name, c) in &r.classifiers {
                println!("{name}: {} {:?}", c.selected, c.posteriors);
            }
            Ok(())
        }
        Command::Pbcm { config } => {
            let r = cmd_pbcm(&config)?;
            println!("selected {} (ratio {})", r.selected, r.ratio);
            Ok(())
        }
        Command::Simulate {
            family,
            params,
            n,
            seed,
            out,
        } => cmd_simulate(&family, &params, n, seed, &out),
        Command::Baselines { config } => {
            let r = cmd_baselines(&config)?;
            println!(
                "lambda_obs {} p_against_a {} p_against_b {}",
                r.lambda_obs, r.p_against_a, r.p_against_b
            );
            Ok(())
        }
    })?
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mimicry: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
