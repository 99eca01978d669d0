//! Command-line front end for the Monte Carlo harness.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fbmc_cpd::harness::{emit_histogram, run_scenario, write_csv_file, write_histogram_csv, Scenario};
use fbmc_cpd::prototype::{compute_weights, design_prototype};
use fbmc_cpd::receiver::ReceiverMode;

#[derive(Parser)]
#[command(
    name = "fbmc-sim",
    version,
    about = "MIMO-FBMC/OQAM joint channel estimation and detection simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the NMSE/BER/iteration Monte Carlo grid and write CSV rows.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override trials per SNR point.
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated receiver modes to keep.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<String>>,
    },
    /// Histogram of the imaginary part of the pseudo-symbols.
    Histogram {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Design the prototype filter and print its interference weights.
    Weights {
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "K")]
        k: usize,
    },
}

fn load(path: &PathBuf) -> Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Simulate {
            scenario,
            out,
            seed,
            trials,
            modes,
        } => {
            let mut sc = load(&scenario)?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            if let Some(trials) = trials {
                if trials == 0 {
                    bail!("--trials must be at least 1");
                }
                sc.trials_per_point = trials;
            }
            if let Some(modes) = modes {
                let keep = modes
                    .iter()
                    .map(|m| m.trim().parse::<ReceiverMode>())
                    .collect::<Result<Vec<_>, _>>()?;
                sc.restrict_modes(&keep)?;
            }
            let rows = run_scenario(&sc)?;
            write_csv_file(&rows, &out).with_context(|| format!("writing {}", out.display()))?;
            let unreliable = rows.iter().filter(|r| r.unreliable).count();
            log::info!(
                "{} rows written to {} ({unreliable} unreliable)",
                rows.len(),
                out.display()
            );
        }
        Command::Histogram { scenario, out } => {
            let hist = emit_histogram(&load(&scenario)?)?;
            let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_histogram_csv(&hist, file)?;
            log::info!(
                "{} samples, mean {:.3e}, variance {:.4}; written to {}",
                hist.count,
                hist.mean,
                hist.variance,
                out.display()
            );
        }
        Command::Weights { m, k } => {
            let filter = design_prototype(m, k)?;
            let w = compute_weights(&filter)?;
            println!("beta  = {:.10}", w.beta);
            println!("gamma = {:.10}", w.gamma);
            println!("delta = {:.10}", w.delta);
        }
    }
    Ok(())
}
