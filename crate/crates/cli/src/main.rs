use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hilbert_rg::ModelKind;
use hilbert_rg_cli::commands::FIXED_POINT_SIZES;
use hilbert_rg_cli::config::ModelArg;
use hilbert_rg_cli::{
    cmd_fixedpoint, cmd_flow, cmd_spectrum, cmd_sweep, cmd_table1, CommonArgs, Outcome, RunConfig, SweepGrid,
};

/// Hilbert space reduction with coupling-constant renormalisation.
#[derive(Debug, Parser)]
#[command(name = "hilbert-rg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lowest eigenvalues of the initial Hamiltonian
    Spectrum(CommonArgs),
    /// Reduce the Hamiltonian down to --n-min and emit the trace
    Flow(CommonArgs),
    /// Reproduce the published tight-binding flows in both target modes
    Table1(CommonArgs),
    /// Degenerate-model regression (N = 5, 10, 20, 50 unless --n is given)
    Fixedpoint(CommonArgs),
    /// Run a flow for every point of a model x N x g0 grid
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Models to sweep (defaults to --model)
        #[arg(long, value_enum, value_delimiter = ',')]
        models: Vec<ModelArg>,
        /// Initial dimensions (defaults to --n)
        #[arg(long, value_delimiter = ',')]
        n_grid: Vec<usize>,
        /// Initial couplings (defaults to --g0)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        g0_grid: Vec<f64>,
    },
}

fn emit(cfg: &RunConfig, outcome: &Outcome) -> Result<()> {
    match &cfg.output_path {
        Some(path) => {
            std::fs::write(path, &outcome.data).with_context(|| format!("writing {}", path.display()))?;
            print!("{}", outcome.summary);
        }
        None => {
            std::io::stdout().write_all(outcome.data.as_bytes())?;
            eprint!("{}", outcome.summary);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let (cfg, outcome) = match cli.command {
        Command::Spectrum(args) => {
            let cfg = RunConfig::resolve(&args)?;
            let out = cmd_spectrum(&cfg)?;
            (cfg, out)
        }
        Command::Flow(args) => {
            let cfg = RunConfig::resolve(&args)?;
            let out = cmd_flow(&cfg)?;
            (cfg, out)
        }
        Command::Table1(args) => {
            let cfg = RunConfig::resolve(&args)?;
            let out = cmd_table1(cfg.output_format)?;
            (cfg, out)
        }
        Command::Fixedpoint(args) => {
            let cfg = RunConfig::resolve(&args)?;
            let sizes = args.n.map_or(FIXED_POINT_SIZES.to_vec(), |n| vec![n]);
            let out = cmd_fixedpoint(&cfg, &sizes)?;
            (cfg, out)
        }
        Command::Sweep {
            common,
            models,
            n_grid,
            g0_grid,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            let grid = SweepGrid {
                models: if models.is_empty() {
                    vec![cfg.model.kind]
                } else {
                    models.into_iter().map(ModelKind::from).collect()
                },
                sizes: if n_grid.is_empty() {
                    vec![cfg.model.n]
                } else {
                    n_grid
                },
                couplings: if g0_grid.is_empty() {
                    vec![cfg.model.g0]
                } else {
                    g0_grid
                },
            };
            let out = cmd_sweep(&cfg, &grid)?;
            (cfg, out)
        }
    };
    emit(&cfg, &outcome)?;
    Ok(outcome.success)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
