//! Subcommand implementations behind the `ehcontract` binary.
//!
//! Every command writes its tables plus a `manifest.json` into the output
//! directory and maps its outcome onto a process exit code:
//! 0 success, 1 configuration or input error, 2 solver failure,
//! 3 feasibility failure.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::Serialize;

use ehcontract::io::{
    parse_config, parse_contract_csv, write_contract_csv, write_curves_csv, write_sweep_csv,
    FormatError, RunConfig,
};
use ehcontract::scenario::{market_for, run_sweep, utility_curves, RNG_ALGORITHM};
use ehcontract::solver::solve;
use ehcontract::verify::{verify, FeasibilityReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    ConfigError = 1,
    SolverFailure = 2,
    Infeasible = 3,
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub message: Option<String>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: FormatError },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("solver failed: {0}")]
    Solver(ehcontract::Error),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Config { .. } | CliError::Io(_) => Status::ConfigError,
            CliError::Solver(_) => Status::SolverFailure,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    pub gamma_steps: Option<usize>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)?;
    let wrap = |source| CliError::Config {
        path: path.display().to_string(),
        source,
    };
    let mut cfg = parse_config(&text).map_err(wrap)?;
    if let Some(seed) = overrides.seed {
        cfg.scenario.rng_seed = seed;
    }
    if let Some(v) = overrides.gamma_min {
        cfg.sweep.gamma_min = Some(v);
    }
    if let Some(v) = overrides.gamma_max {
        cfg.sweep.gamma_max = Some(v);
    }
    if let Some(v) = overrides.gamma_steps {
        cfg.sweep.gamma_steps = v;
    }
    cfg.validate().map_err(wrap)?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    command: &'a str,
    seed: Option<u64>,
    rng_algorithm: &'a str,
    power_unit: Option<&'a str>,
    started_at: String,
    finished_at: String,
    config_echo: Option<String>,
    output_paths: Vec<String>,
}

struct Run<'a> {
    command: &'a str,
    out_dir: &'a Path,
    started_at: String,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn start(command: &'a str, out_dir: &'a Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            command,
            out_dir,
            started_at: Utc::now().to_rfc3339(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish(
        mut self,
        cfg: Option<&RunConfig>,
        status: Status,
        message: Option<String>,
    ) -> Result<Outcome, CliError> {
        let manifest_path = self.out_dir.join("manifest.json");
        let mut output_paths: Vec<String> = self
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        output_paths.push(manifest_path.display().to_string());
        let manifest = Manifest {
            tool_version: TOOL_VERSION,
            command: self.command,
            seed: cfg.map(|c| c.scenario.rng_seed),
            rng_algorithm: RNG_ALGORITHM,
            power_unit: cfg.map(|c| c.scenario.power_unit.symbol()),
            started_at: self.started_at,
            finished_at: Utc::now().to_rfc3339(),
            config_echo: cfg.map(RunConfig::to_toml),
            output_paths,
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&manifest_path, json + "\n")?;
        self.outputs.push(manifest_path);
        Ok(Outcome {
            status,
            message,
            outputs: self.outputs,
        })
    }
}

fn report_json(report: &FeasibilityReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Solves the optimal contract and verifies it.
///
/// Writes `contract.csv`, `feasibility.json`, `config.resolved.toml` and `manifest.json`.
pub fn cmd_solve(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let mut run = Run::start("solve", out_dir)?;
    run.write("config.resolved.toml", &cfg.to_toml())?;
    let gamma = cfg.solve_gamma().map_err(|source| CliError::Config {
        path: "config".into(),
        source,
    })?;
    let market = market_for(&cfg.scenario, gamma).map_err(CliError::Solver)?;
    let result = solve(&market, &cfg.solver).map_err(CliError::Solver)?;
    let report =
        verify(&result.contract, market.profile(), cfg.verify.tol).map_err(CliError::Solver)?;
    run.write(
        "contract.csv",
        &write_contract_csv(market.profile(), &result.contract),
    )?;
    run.write("feasibility.json", &report_json(&report))?;

    let (status, message) = if !result.converged {
        (
            Status::SolverFailure,
            Some(format!(
                "solver did not converge after {} iterations (residual {:e})",
                result.iterations, result.kkt_residual
            )),
        )
    } else if !report.all_ok() {
        (
            Status::Infeasible,
            Some(format!(
                "contract failed verification (min slack {:e})",
                report.min_slack
            )),
        )
    } else {
        (Status::Success, None)
    };
    run.finish(Some(cfg), status, message)
}

/// Welfare of the three mechanisms over the configured gamma grid. Writes `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let mut run = Run::start("sweep", out_dir)?;
    run.write("config.resolved.toml", &cfg.to_toml())?;
    let grid = cfg.gamma_grid().map_err(|source| CliError::Config {
        path: "config".into(),
        source,
    })?;
    let sweep = run_sweep(&cfg.scenario, &grid, &cfg.solver).map_err(CliError::Solver)?;
    run.write("sweep.csv", &write_sweep_csv(&sweep))?;
    run.finish(Some(cfg), Status::Success, None)
}

/// Per-type utility over all menu items for the configured probe types.
/// Writes `curves.csv` and the underlying `contract.csv`.
pub fn cmd_curves(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let mut run = Run::start("curves", out_dir)?;
    run.write("config.resolved.toml", &cfg.to_toml())?;
    let gamma = cfg.solve_gamma().map_err(|source| CliError::Config {
        path: "config".into(),
        source,
    })?;
    let k = cfg.scenario.k_types;
    if let Some(bad) = cfg.curves.probe_types.iter().find(|&&t| t == 0 || t > k) {
        return Err(CliError::Config {
            path: "config".into(),
            source: FormatError::Schema(format!("curves.probe_types entry {bad} outside 1..={k}")),
        });
    }
    let market = market_for(&cfg.scenario, gamma).map_err(CliError::Solver)?;
    let result = solve(&market, &cfg.solver).map_err(CliError::Solver)?;
    let curves = utility_curves(&result.contract, market.profile(), &cfg.curves.probe_types)
        .map_err(CliError::Solver)?;
    run.write(
        "contract.csv",
        &write_contract_csv(market.profile(), &result.contract),
    )?;
    run.write("curves.csv", &write_curves_csv(&curves))?;
    let status = if result.converged {
        Status::Success
    } else {
        Status::SolverFailure
    };
    run.finish(Some(cfg), status, None)
}

/// Verifies a contract table. Writes `feasibility.json`.
pub fn cmd_verify(contract_path: &Path, tol: f64, out_dir: &Path) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(contract_path)?;
    let (profile, contract) = parse_contract_csv(&text).map_err(|source| CliError::Config {
        path: contract_path.display().to_string(),
        source,
    })?;
    let mut run = Run::start("verify", out_dir)?;
    let report = verify(&contract, &profile, tol).map_err(CliError::Solver)?;
    run.write("feasibility.json", &report_json(&report))?;
    let (status, message) = if report.all_ok() {
        (Status::Success, None)
    } else {
        (
            Status::Infeasible,
            Some(format!(
                "contract failed verification (min slack {:e})",
                report.min_slack
            )),
        )
    };
    run.finish(None, status, message)
}
