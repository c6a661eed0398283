use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ehcontract::verify::DEFAULT_TOL;
use ehcontract_cli::{
    cmd_curves, cmd_solve, cmd_sweep, cmd_verify, load_config, CliError, Outcome, Overrides,
};

/// Optimal energy-reward contracts for RF energy trading under adverse selection.
#[derive(Debug, Parser)]
#[command(name = "ehcontract", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "EHCONTRACT_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides `scenario.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gamma_min: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long)]
    gamma_steps: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            gamma_min: self.gamma_min,
            gamma_max: self.gamma_max,
            gamma_steps: self.gamma_steps,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the optimal contract and verify it.
    Solve(Common),
    /// Sweep gamma and compare contract, complete-information and linear-pricing welfare.
    Sweep(Common),
    /// Utility of probe types over every contract item.
    Curves(Common),
    /// Verify IR, IC, monotonicity and self-reveal of an existing contract table.
    Verify {
        /// Contract CSV with columns type_index,theta,q,pi.
        #[arg(long)]
        contract: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, env = "EHCONTRACT_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Solve(c) => cmd_solve(&load_config(&c.config, &c.overrides())?, &c.out),
        Command::Sweep(c) => cmd_sweep(&load_config(&c.config, &c.overrides())?, &c.out),
        Command::Curves(c) => cmd_curves(&load_config(&c.config, &c.overrides())?, &c.out),
        Command::Verify { contract, tol, out } => cmd_verify(&contract, tol, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for path in &outcome.outputs {
                println!("wrote {}", path.display());
            }
            if let Some(msg) = &outcome.message {
                eprintln!("error: {msg}");
            }
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status() as u8)
        }
    }
}
