//! Market primitives: physical parameters, EAP types, contract items, and the
//! utility and welfare formulas of the one-DAP, `N`-EAP energy market.
//!
//! Units follow the simulator: powers in mW, bandwidth in throughput units
//! (Mbps when `bandwidth = 1` stands for 1 MHz), rewards dimensionless with a
//! unit cost of one.

use serde::{Deserialize, Serialize};

pub use crate::distribution::Composition;
use crate::error::{check_len, Error, Result};

/// Physical constants shared by the whole market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub eta: f64,
    pub bandwidth_w: f64,
    pub noise_n0: f64,
    pub dap_channel_gain: f64,
    pub unit_cost_c: f64,
}

impl PhysicalParams {
    pub fn new(eta: f64, bandwidth_w: f64, noise_n0: f64, dap_channel_gain: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::arg(format!("eta must lie in (0, 1), got {eta}")));
        }
        for (name, v) in [
            ("bandwidth_w", bandwidth_w),
            ("noise_n0", noise_n0),
            ("dap_channel_gain", dap_channel_gain),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            eta,
            bandwidth_w,
            noise_n0,
            dap_channel_gain,
            unit_cost_c: 1.0,
        })
    }

    /// SNR gain per mW of power received at the sensor: `eta * G_as / N0`.
    pub fn gamma(&self) -> f64 {
        self.eta * self.dap_channel_gain / self.noise_n0
    }
}

/// Private physical parameters of one EAP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EapPhysical {
    pub cost_coeff_a: f64,
    pub channel_gain_g: f64,
}

impl EapPhysical {
    pub fn new(cost_coeff_a: f64, channel_gain_g: f64) -> Result<Self> {
        if !(cost_coeff_a > 0.0 && channel_gain_g > 0.0) {
            return Err(Error::arg(format!(
                "cost coefficient and channel gain must be positive, got a = {cost_coeff_a}, G = {channel_gain_g}"
            )));
        }
        Ok(Self {
            cost_coeff_a,
            channel_gain_g,
        })
    }

    pub fn theta(&self) -> f64 {
        type_of(self)
    }
}

/// Type of an EAP, `G^2 / a`. Higher is better.
pub fn type_of(eap: &EapPhysical) -> f64 {
    eap.channel_gain_g * eap.channel_gain_g / eap.cost_coeff_a
}

/// Strictly increasing ladder of `K` type values, each held with probability `1/K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeProfile {
    thetas: Vec<f64>,
}

impl TypeProfile {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::arg("type profile needs at least one type"));
        }
        if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::arg(format!(
                "type values must be positive and finite, got {t}"
            )));
        }
        if let Some(w) = thetas.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::arg(format!(
                "type values must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { thetas })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn k(&self) -> usize {
        self.thetas.len()
    }

    pub fn type_prob(&self) -> f64 {
        1.0 / self.thetas.len() as f64
    }

    /// Same profile with every type multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.thetas.iter().map(|t| t * factor).collect())
    }
}

/// An energy-reward pair: received power `q` at the sensor and reward `pi`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContractItem {
    pub q: f64,
    pub pi: f64,
}

impl ContractItem {
    /// Non-participation.
    pub const NULL: ContractItem = ContractItem { q: 0.0, pi: 0.0 };

    pub fn new(q: f64, pi: f64) -> Result<Self> {
        if !(q >= 0.0 && pi >= 0.0) {
            return Err(Error::arg(format!(
                "contract item must be nonnegative, got ({q}, {pi})"
            )));
        }
        Ok(Self { q, pi })
    }
}

/// A menu of `K` items, index-aligned with a [`TypeProfile`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contract {
    items: Vec<ContractItem>,
}

impl Contract {
    pub fn new(items: Vec<ContractItem>) -> Self {
        Self { items }
    }

    pub fn from_parts(q: &[f64], pi: &[f64]) -> Result<Self> {
        check_len(q.len(), pi.len())?;
        q.iter()
            .zip(pi)
            .map(|(&q, &pi)| ContractItem::new(q, pi))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn null(k: usize) -> Self {
        Self::new(vec![ContractItem::NULL; k])
    }

    pub fn items(&self) -> &[ContractItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn q(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.q).collect()
    }

    pub fn pi(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.pi).collect()
    }
}

/// Power harvested by the sensor, `eta * sum_m p_m G_m`. The sensor transmits
/// with exactly this power (harvest-use).
pub fn harvested_energy(charging_powers: &[f64], channel_gains: &[f64], eta: f64) -> Result<f64> {
    check_len(charging_powers.len(), channel_gains.len())?;
    if charging_powers
        .iter()
        .chain(channel_gains)
        .any(|v| !(*v >= 0.0))
    {
        return Err(Error::arg("charging powers and gains must be nonnegative"));
    }
    Ok(eta
        * charging_powers
            .iter()
            .zip(channel_gains)
            .map(|(p, g)| p * g)
            .sum::<f64>())
}

/// Sensor-to-DAP throughput `W log2(1 + gamma * Q)` for total received power `Q`.
pub fn throughput(total_received_q: f64, gamma: f64, bandwidth_w: f64) -> Result<f64> {
    if !(total_received_q >= 0.0) {
        return Err(Error::arg(format!(
            "total received power must be nonnegative, got {total_received_q}"
        )));
    }
    Ok(bandwidth_w * (gamma * total_received_q).ln_1p() / std::f64::consts::LN_2)
}

/// Utility of an EAP of type `theta` accepting `item`: `pi - q^2 / theta`.
pub fn eap_utility(item: &ContractItem, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::arg(format!("theta must be positive, got {theta}")));
    }
    Ok(item.pi - item.q * item.q / theta)
}

fn received_and_paid(counts: &Composition, contract: &Contract) -> Result<(f64, f64)> {
    check_len(contract.len(), counts.k())?;
    Ok(counts
        .counts()
        .iter()
        .zip(contract.items())
        .fold((0.0, 0.0), |(q, p), (&n, item)| {
            (q + n as f64 * item.q, p + n as f64 * item.pi)
        }))
}

/// DAP utility for a realized composition: throughput minus total reward.
pub fn dap_utility(
    counts: &Composition,
    contract: &Contract,
    gamma: f64,
    bandwidth_w: f64,
) -> Result<f64> {
    let (received, paid) = received_and_paid(counts, contract)?;
    Ok(throughput(received, gamma, bandwidth_w)? - paid)
}

/// Social welfare for a realized composition: throughput minus total energy
/// cost. Rewards are internal transfers and do not appear.
pub fn social_welfare(
    counts: &Composition,
    contract: &Contract,
    profile: &TypeProfile,
    gamma: f64,
    bandwidth_w: f64,
) -> Result<f64> {
    check_len(profile.k(), counts.k())?;
    let (received, _) = received_and_paid(counts, contract)?;
    let cost: f64 = counts
        .counts()
        .iter()
        .zip(contract.items())
        .zip(profile.thetas())
        .map(|((&n, item), theta)| n as f64 * item.q * item.q / theta)
        .sum();
    Ok(throughput(received, gamma, bandwidth_w)? - cost)
}
