//! Feasibility checks for arbitrary contracts and a brute-force grid oracle
//! for the optimal menu.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::model::{dap_utility, Contract, TypeProfile};
use crate::solver::{expected_quadratic_coefficients, reward_recovery, Market};

/// Default absolute tolerance on IR and IC slacks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub tol: f64,
    pub ir_slacks: Vec<f64>,
    /// `ic_slack_matrix[k][j]`: how much type `k` prefers its own item to item `j`.
    pub ic_slack_matrix: Vec<Vec<f64>>,
    pub monotone_q: bool,
    pub monotone_pi: bool,
    pub self_reveal: Vec<bool>,
    pub min_slack: f64,
    pub feasible: bool,
}

impl FeasibilityReport {
    /// Feasible, monotone, and self-revealing for every type.
    pub fn all_ok(&self) -> bool {
        self.feasible && self.monotone_q && self.monotone_pi && self.self_reveal.iter().all(|&b| b)
    }
}

/// `table[k][j] = pi_j - q_j^2 / theta_k`: utility of type `k` taking item `j`.
pub fn utility_table(contract: &Contract, profile: &TypeProfile) -> Result<Vec<Vec<f64>>> {
    check_len(profile.k(), contract.len())?;
    Ok(profile
        .thetas()
        .iter()
        .map(|theta| {
            contract
                .items()
                .iter()
                .map(|it| it.pi - it.q * it.q / theta)
                .collect()
        })
        .collect())
}

pub fn check_ir(contract: &Contract, profile: &TypeProfile) -> Result<Vec<f64>> {
    Ok(utility_table(contract, profile)?
        .iter()
        .enumerate()
        .map(|(k, row)| row[k])
        .collect())
}

pub fn check_ic(contract: &Contract, profile: &TypeProfile) -> Result<Vec<Vec<f64>>> {
    Ok(utility_table(contract, profile)?
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let own = row[k];
            row.iter()
                .enumerate()
                .map(|(j, u)| if j == k { 0.0 } else { own - u })
                .collect()
        })
        .collect())
}

/// Whether each type's best item is its own. Items within `tol` of the own
/// item's utility count as ties and resolve to the own item.
pub fn check_self_reveal(
    contract: &Contract,
    profile: &TypeProfile,
    tol: f64,
) -> Result<Vec<bool>> {
    Ok(utility_table(contract, profile)?
        .iter()
        .enumerate()
        .map(|(k, row)| row.iter().all(|u| *u <= row[k] + tol))
        .collect())
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

pub fn verify(contract: &Contract, profile: &TypeProfile, tol: f64) -> Result<FeasibilityReport> {
    let ir_slacks = check_ir(contract, profile)?;
    let ic_slack_matrix = check_ic(contract, profile)?;
    let off_diagonal = ic_slack_matrix.iter().enumerate().flat_map(|(k, row)| {
        row.iter()
            .enumerate()
            .filter(move |(j, _)| *j != k)
            .map(|(_, s)| *s)
    });
    let min_slack = ir_slacks
        .iter()
        .copied()
        .chain(off_diagonal)
        .fold(f64::INFINITY, f64::min);
    Ok(FeasibilityReport {
        tol,
        monotone_q: nondecreasing(&contract.q()),
        monotone_pi: nondecreasing(&contract.pi()),
        self_reveal: check_self_reveal(contract, profile, tol)?,
        feasible: min_slack >= -tol,
        min_slack,
        ir_slacks,
        ic_slack_matrix,
    })
}

/// Local downward and upward IC between adjacent types.
pub fn satisfies_local_ic(contract: &Contract, profile: &TypeProfile, tol: f64) -> Result<bool> {
    let u = utility_table(contract, profile)?;
    let k = u.len();
    Ok((1..k).all(|i| u[i][i] >= u[i][i - 1] - tol)
        && (0..k.saturating_sub(1)).all(|i| u[i][i] >= u[i][i + 1] - tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub points_per_axis: usize,
    /// Refinement stops once the step on every axis is below this fraction
    /// of that axis's bound.
    pub final_step_rel: f64,
    pub max_types: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points_per_axis: 11,
            final_step_rel: 1e-3,
            max_types: 3,
        }
    }
}

/// Expected DAP utility of the menu `(q, reward_recovery(q))`, summed
/// composition by composition.
pub fn oracle_objective(q: &[f64], market: &Market) -> Result<f64> {
    let pi = reward_recovery(q, market.profile())?;
    let contract = Contract::from_parts(q, &pi)?;
    let mut total = 0.0;
    for wc in market.compositions() {
        total += wc.prob
            * dap_utility(
                &wc.composition,
                &contract,
                market.gamma(),
                market.bandwidth_w(),
            )?;
    }
    Ok(total)
}

/// Exhaustive grid search over `q` with successive box refinement.
///
/// Each `q_k` is bounded by `W gamma (N/K) / (2 ln2 E[D_k])`, where the
/// marginal throughput can no longer cover the marginal reward.
pub fn brute_force_best_contract(market: &Market, grid: &GridConfig) -> Result<(Contract, f64)> {
    let k = market.k();
    if k > grid.max_types {
        return Err(Error::OracleTooLarge {
            k_types: k,
            limit: grid.max_types,
        });
    }
    if grid.points_per_axis < 3 || !(grid.final_step_rel > 0.0) {
        return Err(Error::arg(
            "grid needs at least 3 points per axis and a positive step",
        ));
    }
    if market.n_eaps() == 0 || market.gamma() == 0.0 {
        return Ok((Contract::null(k), 0.0));
    }
    let mean = market.n_eaps() as f64 / k as f64;
    let bounds: Vec<f64> = expected_quadratic_coefficients(market.profile(), market.n_eaps())
        .iter()
        .map(|d| market.bandwidth_w() * market.gamma() * mean / (2.0 * std::f64::consts::LN_2 * d))
        .collect();

    let mut lo = vec![0.0; k];
    let mut hi = bounds.clone();
    let mut best_q = vec![0.0; k];
    let mut best_val = oracle_objective(&best_q, market)?;
    let mut point = vec![0.0; k];
    let mut idx = vec![0usize; k];
    let m = grid.points_per_axis;
    loop {
        let steps: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) / (m - 1) as f64)
            .collect();
        idx.iter_mut().for_each(|i| *i = 0);
        'grid: loop {
            for d in 0..k {
                point[d] = lo[d] + idx[d] as f64 * steps[d];
            }
            let v = oracle_objective(&point, market)?;
            if v > best_val {
                best_val = v;
                best_q.copy_from_slice(&point);
            }
            for i in idx.iter_mut() {
                *i += 1;
                if *i < m {
                    continue 'grid;
                }
                *i = 0;
            }
            break;
        }
        if steps
            .iter()
            .zip(&bounds)
            .all(|(s, b)| *s <= grid.final_step_rel * b)
        {
            break;
        }
        for d in 0..k {
            lo[d] = (best_q[d] - steps[d]).max(0.0);
            hi[d] = (best_q[d] + steps[d]).min(bounds[d]);
        }
    }
    let pi = reward_recovery(&best_q, market.profile())?;
    Ok((Contract::from_parts(&best_q, &pi)?, best_val))
}
