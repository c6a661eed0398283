//! Run configuration (TOML) and the CSV schemas for contracts, sweeps, and
//! utility curves.
//!
//! | file | columns |
//! |------|---------|
//! | contract | `type_index,theta,q,pi` |
//! | sweep | `gamma,welfare_contract,welfare_complete,welfare_linear,normalized_contract,normalized_linear` |
//! | curves | `probe_type,item_index,utility` |
//!
//! Type and item indices are 1-based. Floats use Rust's shortest
//! round-trip formatting, so parsing a written file recovers every value
//! bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Contract, ContractItem, TypeProfile};
use crate::scenario::{gamma_range, linspace, ScenarioConfig, SweepResult, UtilityCurve};
use crate::solver::SolverConfig;
use crate::verify::DEFAULT_TOL;

pub const CONTRACT_COLUMNS: [&str; 4] = ["type_index", "theta", "q", "pi"];
pub const SWEEP_COLUMNS: [&str; 6] = [
    "gamma",
    "welfare_contract",
    "welfare_complete",
    "welfare_linear",
    "normalized_contract",
    "normalized_linear",
];
pub const CURVE_COLUMNS: [&str; 3] = ["probe_type", "item_index", "utility"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Schema(String),

    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    /// Channel quality per mW; defaults to the middle of the scenario's range.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    pub gamma_steps: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            gamma_min: None,
            gamma_max: None,
            gamma_steps: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesSection {
    pub probe_types: Vec<usize>,
}

impl Default for CurvesSection {
    fn default() -> Self {
        Self {
            probe_types: vec![3, 6, 9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL }
    }
}

/// Everything a CLI run needs. Only `scenario.n_eaps` and `scenario.k_types`
/// are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub curves: CurvesSection,
    #[serde(default)]
    pub verify: VerifySection,
}

impl RunConfig {
    /// Fully resolved TOML; parsing it yields an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config always serializes")
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        self.scenario.validate()?;
        self.solver.validate()?;
        if let Some(init) = &self.solver.init_q {
            if init.len() != self.scenario.k_types {
                return Err(FormatError::Schema(format!(
                    "solver.init_q has {} entries but scenario.k_types is {}",
                    init.len(),
                    self.scenario.k_types
                )));
            }
        }
        if let Some(g) = self.solve.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(FormatError::Schema(format!(
                    "solve.gamma must be positive, got {g}"
                )));
            }
        }
        if self.sweep.gamma_steps == 0 {
            return Err(FormatError::Schema(
                "sweep.gamma_steps must be at least 1".into(),
            ));
        }
        if !(self.verify.tol >= 0.0) {
            return Err(FormatError::Schema("verify.tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// `gamma` used by `solve` and `curves`.
    pub fn solve_gamma(&self) -> Result<f64, FormatError> {
        match self.solve.gamma {
            Some(g) => Ok(g),
            None => {
                let (lo, hi) = gamma_range(&self.scenario)?;
                Ok((lo + hi) / 2.0)
            }
        }
    }

    pub fn gamma_grid(&self) -> Result<Vec<f64>, FormatError> {
        let (lo, hi) = gamma_range(&self.scenario)?;
        let lo = self.sweep.gamma_min.unwrap_or(lo);
        let hi = self.sweep.gamma_max.unwrap_or(hi);
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(FormatError::Schema(format!(
                "invalid sweep gamma range [{lo}, {hi}]"
            )));
        }
        Ok(linspace(lo, hi, self.sweep.gamma_steps))
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, FormatError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        FormatError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Shortest representation that parses back to the same value; scientific
/// notation outside `[1e-4, 1e15)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn to_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn write_contract_csv(profile: &TypeProfile, contract: &Contract) -> String {
    to_csv(
        &CONTRACT_COLUMNS,
        profile
            .thetas()
            .iter()
            .zip(contract.items())
            .enumerate()
            .map(|(i, (theta, it))| [(i + 1).to_string(), num(*theta), num(it.q), num(it.pi)]),
    )
}

pub fn write_sweep_csv(sweep: &SweepResult) -> String {
    to_csv(
        &SWEEP_COLUMNS,
        (0..sweep.gamma_grid.len()).map(|i| {
            [
                sweep.gamma_grid[i],
                sweep.welfare_contract[i],
                sweep.welfare_complete[i],
                sweep.welfare_linear[i],
                sweep.normalized_contract[i],
                sweep.normalized_linear[i],
            ]
            .map(num)
        }),
    )
}

pub fn write_curves_csv(curves: &[UtilityCurve]) -> String {
    to_csv(
        &CURVE_COLUMNS,
        curves.iter().flat_map(|c| {
            c.utilities
                .iter()
                .enumerate()
                .map(move |(j, u)| [c.probe_type.to_string(), (j + 1).to_string(), num(*u)])
        }),
    )
}

fn csv_syntax(e: &csv::Error) -> FormatError {
    let (line, column) = match e.position() {
        Some(p) => (p.line() as usize, 0),
        None => (0, 0),
    };
    FormatError::Syntax {
        line,
        column,
        message: e.to_string(),
    }
}

/// Parses a contract table written by [`write_contract_csv`] (or by hand)
/// back into its type ladder and menu.
pub fn parse_contract_csv(text: &str) -> Result<(TypeProfile, Contract), FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_syntax(&e))?.clone();
    if headers.iter().ne(CONTRACT_COLUMNS) {
        return Err(FormatError::Schema(format!(
            "contract header must be `{}`, got `{}`",
            CONTRACT_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut thetas = Vec::new();
    let mut items = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_syntax(&e))?;
        let line = row + 2;
        let field = |i: usize| -> Result<&str, FormatError> {
            record.get(i).ok_or_else(|| {
                FormatError::Schema(format!("line {line}: missing `{}`", CONTRACT_COLUMNS[i]))
            })
        };
        let number = |i: usize| -> Result<f64, FormatError> {
            let raw = field(i)?;
            raw.parse::<f64>().map_err(|_| FormatError::Syntax {
                line,
                column: i + 1,
                message: format!("`{}` is not a number: {raw:?}", CONTRACT_COLUMNS[i]),
            })
        };
        let index: usize = field(0)?.parse().map_err(|_| FormatError::Syntax {
            line,
            column: 1,
            message: format!(
                "`type_index` is not an integer: {:?}",
                record.get(0).unwrap_or("")
            ),
        })?;
        if index != row + 1 {
            return Err(FormatError::Schema(format!(
                "line {line}: type_index must be {} (rows in type order), got {index}",
                row + 1
            )));
        }
        thetas.push(number(1)?);
        items.push(ContractItem::new(number(2)?, number(3)?)?);
    }
    let profile = TypeProfile::new(thetas)?;
    Ok((profile, Contract::new(items)))
}
