//! Optimal contract under asymmetric information.
//!
//! With IR binding at the lowest type and every local downward IC binding,
//! rewards are a fixed function of the power vector `q`:
//!
//! ```text
//! pi_1 = q_1^2 / theta_1
//! pi_k = pi_{k-1} + (q_k^2 - q_{k-1}^2) / theta_k
//! ```
//!
//! Substituting into the expected DAP utility leaves a concave program in `q`
//! alone over the nonnegative orthant:
//!
//! ```text
//! max_q  E[W log2(1 + gamma sum_k n_k q_k)] - sum_k E[D_k] q_k^2
//! D_k = n_k / theta_k + (1/theta_k - 1/theta_{k+1}) sum_{i>k} n_i   (k < K)
//! D_K = n_K / theta_K
//! ```
//!
//! which [`solve`] maximizes by diagonally scaled projected gradient ascent
//! with Armijo backtracking.

use serde::{Deserialize, Serialize};

use crate::distribution::{weighted_compositions, Composition, WeightedComposition};
use crate::error::{check_len, Error, Result};
use crate::model::{Contract, TypeProfile};

const LN_2: f64 = std::f64::consts::LN_2;

/// A priced market: type ladder, channel quality `gamma`, bandwidth, and the
/// number of EAPs, with the weighted composition table cached.
#[derive(Debug, Clone)]
pub struct Market {
    profile: TypeProfile,
    gamma: f64,
    bandwidth_w: f64,
    n_eaps: u32,
    weighted: Vec<WeightedComposition>,
}

impl Market {
    pub fn new(profile: TypeProfile, gamma: f64, bandwidth_w: f64, n_eaps: u32) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::arg(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        if !(bandwidth_w > 0.0 && bandwidth_w.is_finite()) {
            return Err(Error::arg(format!(
                "bandwidth must be positive, got {bandwidth_w}"
            )));
        }
        let weighted = weighted_compositions(n_eaps, profile.k())?;
        Ok(Self {
            profile,
            gamma,
            bandwidth_w,
            n_eaps,
            weighted,
        })
    }

    /// Same market at a different `gamma`, reusing the composition table.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::arg(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        Ok(Self {
            gamma,
            ..self.clone()
        })
    }

    pub fn profile(&self) -> &TypeProfile {
        &self.profile
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn bandwidth_w(&self) -> f64 {
        self.bandwidth_w
    }

    pub fn n_eaps(&self) -> u32 {
        self.n_eaps
    }

    pub fn k(&self) -> usize {
        self.profile.k()
    }

    pub fn compositions(&self) -> &[WeightedComposition] {
        &self.weighted
    }

    /// Expected throughput `E[W log2(1 + gamma sum n_k q_k)]` and its gradient in `q`.
    pub(crate) fn expected_throughput(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; q.len()];
        let scale = self.bandwidth_w / LN_2;
        for wc in &self.weighted {
            let counts = wc.composition.counts();
            let received: f64 = counts.iter().zip(q).map(|(&n, q)| n as f64 * q).sum();
            let x = self.gamma * received;
            value += wc.prob * scale * x.ln_1p();
            let slope = wc.prob * scale * self.gamma / (1.0 + x);
            for (g, &n) in grad.iter_mut().zip(counts) {
                *g += slope * n as f64;
            }
        }
        (value, grad)
    }
}

/// Coefficients `D_k(n)` with `sum_k n_k pi_k(q) = sum_k D_k(n) q_k^2` when
/// `pi` comes from [`reward_recovery`].
pub fn quadratic_coefficients(profile: &TypeProfile, comp: &Composition) -> Vec<f64> {
    let thetas = profile.thetas();
    let counts = comp.counts();
    let k = thetas.len();
    let mut above = 0.0;
    let mut out = vec![0.0; k];
    for j in (0..k).rev() {
        let own = counts[j] as f64 / thetas[j];
        out[j] = if j + 1 < k {
            own + (1.0 / thetas[j] - 1.0 / thetas[j + 1]) * above
        } else {
            own
        };
        above += counts[j] as f64;
    }
    out
}

/// `E[D_k]` under uniform types, from `E[n_i] = N/K`.
pub fn expected_quadratic_coefficients(profile: &TypeProfile, n_total: u32) -> Vec<f64> {
    let thetas = profile.thetas();
    let k = thetas.len();
    let mean = n_total as f64 / k as f64;
    (0..k)
        .map(|j| {
            if j + 1 < k {
                mean * (1.0 / thetas[j]
                    + (k - j - 1) as f64 * (1.0 / thetas[j] - 1.0 / thetas[j + 1]))
            } else {
                mean / thetas[j]
            }
        })
        .collect()
}

/// Rewards that make IR bind for type 1 and every local downward IC bind.
pub fn reward_recovery(q: &[f64], profile: &TypeProfile) -> Result<Vec<f64>> {
    check_len(profile.k(), q.len())?;
    check_nonneg(q)?;
    let thetas = profile.thetas();
    let mut pi = Vec::with_capacity(q.len());
    let mut prev_pi = 0.0;
    let mut prev_q2 = 0.0;
    for (&qk, &theta) in q.iter().zip(thetas) {
        let q2 = qk * qk;
        let p = prev_pi + (q2 - prev_q2) / theta;
        pi.push(p);
        prev_pi = p;
        prev_q2 = q2;
    }
    Ok(pi)
}

fn check_nonneg(q: &[f64]) -> Result<()> {
    match q.iter().find(|v| !(**v >= 0.0)) {
        Some(v) => Err(Error::arg(format!(
            "received power must be nonnegative, got {v}"
        ))),
        None => Ok(()),
    }
}

/// Expected DAP utility with rewards eliminated.
pub fn reduced_objective(q: &[f64], market: &Market) -> Result<f64> {
    check_len(market.k(), q.len())?;
    check_nonneg(q)?;
    let (value, _) = market.expected_throughput(q);
    Ok(value - quadratic_cost(q, market))
}

fn quadratic_cost(q: &[f64], market: &Market) -> f64 {
    expected_quadratic_coefficients(market.profile(), market.n_eaps())
        .iter()
        .zip(q)
        .map(|(d, q)| d * q * q)
        .sum()
}

pub fn reduced_gradient(q: &[f64], market: &Market) -> Result<Vec<f64>> {
    check_len(market.k(), q.len())?;
    check_nonneg(q)?;
    let coeffs = expected_quadratic_coefficients(market.profile(), market.n_eaps());
    let (_, mut grad) = market.expected_throughput(q);
    for ((g, d), q) in grad.iter_mut().zip(&coeffs).zip(q) {
        *g -= 2.0 * d * q;
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub backtrack_beta: f64,
    pub backtrack_c: f64,
    pub init_q: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iters: 10_000,
            backtrack_beta: 0.5,
            backtrack_c: 1e-4,
            init_q: None,
        }
    }
}

impl SolverConfig {
    pub const DEFAULT_INIT_Q: f64 = 1e-3;

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::arg("grad_tol must be positive"));
        }
        if self.max_iters < 1 {
            return Err(Error::arg("max_iters must be at least 1"));
        }
        if !(self.backtrack_beta > 0.0 && self.backtrack_beta < 1.0) {
            return Err(Error::arg("backtrack_beta must lie in (0, 1)"));
        }
        if !(self.backtrack_c > 0.0 && self.backtrack_c < 1.0) {
            return Err(Error::arg("backtrack_c must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub contract: Contract,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// Max-norm of the gradient projected onto the tangent cone of `q >= 0`.
fn projected_gradient_norm(q: &[f64], grad: &[f64]) -> f64 {
    q.iter()
        .zip(grad)
        .map(|(&q, &g)| if q > 0.0 { g.abs() } else { g.max(0.0) })
        .fold(0.0, f64::max)
}

/// Solves the reduced program and recovers the rewards.
///
/// Non-convergence within `max_iters` is reported through
/// [`SolveResult::converged`]. A recovered contract that is not monotone in
/// type is an error, since the reduction assumes monotonicity.
pub fn solve(market: &Market, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let k = market.k();
    if market.n_eaps() == 0 {
        return Ok(SolveResult {
            contract: Contract::null(k),
            objective: 0.0,
            iterations: 0,
            converged: true,
            kkt_residual: 0.0,
        });
    }

    let mut q = match &cfg.init_q {
        Some(init) => {
            check_len(k, init.len())?;
            init.iter().map(|v| v.max(0.0)).collect()
        }
        None => vec![SolverConfig::DEFAULT_INIT_Q; k],
    };
    let coeffs = expected_quadratic_coefficients(market.profile(), market.n_eaps());
    // The quadratic part's curvature; the log part only adds negative curvature.
    let scaling: Vec<f64> = coeffs.iter().map(|d| 1.0 / (2.0 * d)).collect();

    let evaluate = |q: &[f64]| {
        let (value, mut grad) = market.expected_throughput(q);
        let cost: f64 = coeffs.iter().zip(q).map(|(d, q)| d * q * q).sum();
        for ((g, d), q) in grad.iter_mut().zip(&coeffs).zip(q) {
            *g -= 2.0 * d * q;
        }
        (value - cost, value.abs() + cost, grad)
    };

    let (mut f, mut magnitude, mut grad) = evaluate(&q);
    let mut residual = projected_gradient_norm(&q, &grad);
    let mut iterations = 0;
    let mut converged = residual <= cfg.grad_tol;

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-20 {
            let candidate: Vec<f64> = q
                .iter()
                .zip(&grad)
                .zip(&scaling)
                .map(|((q, g), s)| (q + t * s * g).max(0.0))
                .collect();
            let predicted: f64 = candidate
                .iter()
                .zip(&q)
                .zip(&grad)
                .map(|((c, q), g)| g * (c - q))
                .sum();
            let (fc, mc, gc) = evaluate(&candidate);
            // Differences below rounding noise of the objective count as ties.
            let noise = 64.0 * f64::EPSILON * (magnitude + mc);
            if fc >= f + cfg.backtrack_c * predicted - noise {
                accepted = Some((candidate, fc, mc, gc));
                break;
            }
            t *= cfg.backtrack_beta;
        }
        let Some((candidate, fc, mc, gc)) = accepted else {
            break;
        };
        q = candidate;
        f = fc;
        magnitude = mc;
        grad = gc;
        residual = projected_gradient_norm(&q, &grad);
        converged = residual <= cfg.grad_tol;
    }

    let pi = reward_recovery(&q, market.profile())?;
    check_monotone(&q, &pi)?;
    Ok(SolveResult {
        contract: Contract::from_parts(&q, &pi)?,
        objective: f,
        iterations,
        converged,
        kkt_residual: residual,
    })
}

fn check_monotone(q: &[f64], pi: &[f64]) -> Result<()> {
    let slack = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
    for j in 1..q.len() {
        if q[j] < q[j - 1] - slack(q[j], q[j - 1]) || pi[j] < pi[j - 1] - slack(pi[j], pi[j - 1]) {
            return Err(Error::MonotonicityViolation {
                lower: j,
                upper: j + 1,
            });
        }
    }
    Ok(())
}
