//! Physical scenarios, type ladders, and welfare sweeps over the channel
//! quality `gamma`.
//!
//! Defaults reproduce the reference deployment: `eta = 0.5`, 1 MHz bandwidth
//! (throughput in Mbps), energy cost coefficients in `[0.1, 1]`, EAP-sensor
//! distances in `[5, 10]` m, DAP-sensor distances in `[15, 25]` m, path-loss
//! exponent 2, 30 dB attenuation at 1 m, and noise power `1e-8` mW.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    expected_complete_info_welfare, linear_pricing_optimize, PriceSearchConfig,
};
use crate::distribution::Composition;
use crate::error::{check_len, Error, Result};
use crate::model::{social_welfare, Contract, TypeProfile};
use crate::solver::{solve, Market, SolverConfig};

/// Generator used by every seeded computation in this module.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3) seeded with seed_from_u64";

/// Unit in which received power `q` is expressed internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerUnit {
    #[default]
    MilliWatt,
    MicroWatt,
}

impl PowerUnit {
    /// Numeric value of 1 mW in this unit.
    pub fn per_milliwatt(self) -> f64 {
        match self {
            PowerUnit::MilliWatt => 1.0,
            PowerUnit::MicroWatt => 1e3,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            PowerUnit::MilliWatt => "mW",
            PowerUnit::MicroWatt => "uW",
        }
    }
}

fn default_a_range() -> [f64; 2] {
    [0.1, 1.0]
}
fn default_d_ms_range() -> [f64; 2] {
    [5.0, 10.0]
}
fn default_d_as_range() -> [f64; 2] {
    [15.0, 25.0]
}
fn default_alpha() -> f64 {
    2.0
}
fn default_ref_atten_db() -> f64 {
    30.0
}
fn default_eta() -> f64 {
    0.5
}
fn default_bandwidth() -> f64 {
    1.0
}
fn default_noise() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_eaps: u32,
    pub k_types: usize,
    #[serde(default = "default_a_range")]
    pub a_range: [f64; 2],
    #[serde(default = "default_d_ms_range")]
    pub d_ms_range: [f64; 2],
    #[serde(default = "default_d_as_range")]
    pub d_as_range: [f64; 2],
    #[serde(default = "default_alpha")]
    pub path_loss_alpha: f64,
    #[serde(default = "default_ref_atten_db")]
    pub ref_atten_db: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// In MHz; throughput is then in Mbps.
    #[serde(default = "default_bandwidth")]
    pub bandwidth_mhz: f64,
    /// In mW.
    #[serde(default = "default_noise")]
    pub noise_mw: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub power_unit: PowerUnit,
}

impl ScenarioConfig {
    /// Reference settings with the given market size.
    pub fn reference_defaults(n_eaps: u32, k_types: usize) -> Self {
        Self {
            n_eaps,
            k_types,
            a_range: default_a_range(),
            d_ms_range: default_d_ms_range(),
            d_as_range: default_d_as_range(),
            path_loss_alpha: default_alpha(),
            ref_atten_db: default_ref_atten_db(),
            eta: default_eta(),
            bandwidth_mhz: default_bandwidth(),
            noise_mw: default_noise(),
            rng_seed: 0,
            power_unit: PowerUnit::MilliWatt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_types < 1 {
            return Err(Error::arg("k_types must be at least 1"));
        }
        for (name, [lo, hi]) in [
            ("a_range", self.a_range),
            ("d_ms_range", self.d_ms_range),
            ("d_as_range", self.d_as_range),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::arg(format!(
                    "{name} must be a positive range [lo, hi], got [{lo}, {hi}]"
                )));
            }
        }
        if self.d_ms_range[0] < 1.0 || self.d_as_range[0] < 1.0 {
            return Err(Error::arg(
                "distances must be at least the 1 m reference distance",
            ));
        }
        if !(self.path_loss_alpha > 0.0) {
            return Err(Error::arg("path_loss_alpha must be positive"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::arg("eta must lie in (0, 1)"));
        }
        if !(self.bandwidth_mhz > 0.0 && self.noise_mw > 0.0) {
            return Err(Error::arg("bandwidth_mhz and noise_mw must be positive"));
        }
        if !self.ref_atten_db.is_finite() {
            return Err(Error::arg("ref_atten_db must be finite"));
        }
        Ok(())
    }

    fn gain(&self, distance: f64) -> Result<f64> {
        channel_gain(distance, self.path_loss_alpha, self.ref_atten_db)
    }
}

/// Large-scale power gain `10^(-atten/10) d^(-alpha)` at distance `d >= 1` m.
pub fn channel_gain(distance_m: f64, alpha: f64, ref_atten_db: f64) -> Result<f64> {
    if !(distance_m >= 1.0) {
        return Err(Error::arg(format!(
            "path-loss model needs distance >= 1 m, got {distance_m}"
        )));
    }
    Ok(10f64.powf(-ref_atten_db / 10.0) * distance_m.powf(-alpha))
}

/// `K` equally spaced types over the attainable `[theta_min, theta_max]`, in mW^2.
pub fn build_type_ladder(cfg: &ScenarioConfig) -> Result<TypeProfile> {
    cfg.validate()?;
    let theta_min = cfg.gain(cfg.d_ms_range[1])?.powi(2) / cfg.a_range[1];
    let theta_max = cfg.gain(cfg.d_ms_range[0])?.powi(2) / cfg.a_range[0];
    let k = cfg.k_types;
    if k == 1 {
        return TypeProfile::new(vec![(theta_min + theta_max) / 2.0]);
    }
    let step = (theta_max - theta_min) / (k - 1) as f64;
    TypeProfile::new(
        (0..k)
            .map(|i| {
                if i + 1 == k {
                    theta_max
                } else {
                    theta_min + step * i as f64
                }
            })
            .collect(),
    )
}

/// `gamma = eta G(d_as) / N0` at the far and near ends of the DAP distance range.
pub fn gamma_range(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let gamma = |d: f64| -> Result<f64> { Ok(cfg.eta * cfg.gain(d)? / cfg.noise_mw) };
    Ok((gamma(cfg.d_as_range[1])?, gamma(cfg.d_as_range[0])?))
}

/// `steps` evenly spaced values over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

/// Market for `cfg` at channel quality `gamma` (per mW), expressed in the
/// configured power unit. Utilities do not depend on the unit.
pub fn market_for(cfg: &ScenarioConfig, gamma: f64) -> Result<Market> {
    let s = cfg.power_unit.per_milliwatt();
    let profile = build_type_ladder(cfg)?.scaled(s * s)?;
    Market::new(profile, gamma / s, cfg.bandwidth_mhz, cfg.n_eaps)
}

/// Expected social welfare of a fixed contract over all compositions.
pub fn expected_social_welfare(contract: &Contract, market: &Market) -> Result<f64> {
    let mut total = 0.0;
    for wc in market.compositions() {
        total += wc.prob
            * social_welfare(
                &wc.composition,
                contract,
                market.profile(),
                market.gamma(),
                market.bandwidth_w(),
            )?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub gamma_grid: Vec<f64>,
    pub welfare_contract: Vec<f64>,
    pub welfare_complete: Vec<f64>,
    pub welfare_linear: Vec<f64>,
    pub normalized_contract: Vec<f64>,
    pub normalized_linear: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub gamma: f64,
    pub welfare_contract: f64,
    pub welfare_complete: f64,
    pub welfare_linear: f64,
}

fn sweep_point(
    base: &Market,
    gamma: f64,
    scale: f64,
    solver_cfg: &SolverConfig,
) -> Result<SweepPoint> {
    if !(gamma > 0.0) {
        return Err(Error::arg("sweep gamma values must be positive"));
    }
    let market = base.with_gamma(gamma / scale)?;
    let res = solve(&market, solver_cfg)?;
    if !res.converged {
        return Err(Error::arg(format!(
            "solver did not converge in {} iterations (residual {:e})",
            res.iterations, res.kkt_residual
        )));
    }
    let linear = linear_pricing_optimize(&market, &PriceSearchConfig::default())?;
    Ok(SweepPoint {
        gamma,
        welfare_contract: expected_social_welfare(&res.contract, &market)?,
        welfare_complete: expected_complete_info_welfare(&market)?,
        welfare_linear: linear.expected_welfare,
    })
}

/// Expected social welfare of the optimal contract, the complete-information
/// optimum, and the optimal linear price at each `gamma` (per mW).
pub fn run_sweep(
    cfg: &ScenarioConfig,
    gamma_grid: &[f64],
    solver_cfg: &SolverConfig,
) -> Result<SweepResult> {
    let base = market_for(cfg, 1.0)?;
    let scale = cfg.power_unit.per_milliwatt();
    let mut out = SweepResult {
        gamma_grid: Vec::with_capacity(gamma_grid.len()),
        welfare_contract: Vec::new(),
        welfare_complete: Vec::new(),
        welfare_linear: Vec::new(),
        normalized_contract: Vec::new(),
        normalized_linear: Vec::new(),
    };
    for &gamma in gamma_grid {
        let p = sweep_point(&base, gamma, scale, solver_cfg).map_err(|e| Error::Sweep {
            gamma,
            source: Box::new(e),
        })?;
        out.gamma_grid.push(gamma);
        out.welfare_contract.push(p.welfare_contract);
        out.welfare_complete.push(p.welfare_complete);
        out.welfare_linear.push(p.welfare_linear);
        out.normalized_contract
            .push(p.welfare_contract / p.welfare_complete);
        out.normalized_linear
            .push(p.welfare_linear / p.welfare_complete);
    }
    Ok(out)
}

impl SweepResult {
    pub fn points(&self) -> impl Iterator<Item = SweepPoint> + '_ {
        (0..self.gamma_grid.len()).map(|i| SweepPoint {
            gamma: self.gamma_grid[i],
            welfare_contract: self.welfare_contract[i],
            welfare_complete: self.welfare_complete[i],
            welfare_linear: self.welfare_linear[i],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityCurve {
    /// 1-based type index.
    pub probe_type: usize,
    /// Utility of the probe type for items `1..=K`.
    pub utilities: Vec<f64>,
}

impl UtilityCurve {
    /// 1-based index of the best item; ties resolve to the probe's own item.
    pub fn peak_item(&self, tol: f64) -> usize {
        let own = self.utilities[self.probe_type - 1];
        let (best, val) =
            self.utilities
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (j, &u)| if u > acc.1 { (j, u) } else { acc },
                );
        if val <= own + tol {
            self.probe_type
        } else {
            best + 1
        }
    }
}

/// Utility of each probe type (1-based) for every item of the menu.
pub fn utility_curves(
    contract: &Contract,
    profile: &TypeProfile,
    probe_types: &[usize],
) -> Result<Vec<UtilityCurve>> {
    check_len(profile.k(), contract.len())?;
    probe_types
        .iter()
        .map(|&t| {
            if t == 0 || t > profile.k() {
                return Err(Error::arg(format!(
                    "probe type {t} outside 1..={}",
                    profile.k()
                )));
            }
            let theta = profile.thetas()[t - 1];
            Ok(UtilityCurve {
                probe_type: t,
                utilities: contract
                    .items()
                    .iter()
                    .map(|it| it.pi - it.q * it.q / theta)
                    .collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of a contract's expected social welfare, drawing each
/// EAP's type uniformly and independently.
pub fn monte_carlo_expected_welfare(
    market: &Market,
    contract: &Contract,
    samples: usize,
    rng_seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::arg("samples must be at least 1"));
    }
    let k = market.k();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut counts = vec![0u32; k];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..market.n_eaps() {
            counts[rng.gen_range(0..k)] += 1;
        }
        let w = social_welfare(
            &Composition::new(counts.clone()),
            contract,
            market.profile(),
            market.gamma(),
            market.bandwidth_w(),
        )?;
        sum += w;
        sum_sq += w * w;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_err: (var / n).sqrt(),
        samples,
    })
}
