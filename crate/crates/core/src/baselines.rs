//! Reference mechanisms: the complete-information optimum (upper bound) and a
//! uniform linear price per unit of received power.

use serde::{Deserialize, Serialize};

use crate::distribution::Composition;
use crate::error::{check_len, Error, Result};
use crate::model::TypeProfile;
use crate::search::golden_section_max;
use crate::solver::Market;

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompleteInfoSolution {
    pub q: Vec<f64>,
    pub pi: Vec<f64>,
    pub lambda: f64,
    pub welfare: f64,
}

/// First-best menu when the DAP observes the counts.
///
/// Stationarity of `W log2(1 + gamma sum n_k q_k) - sum n_k q_k^2 / theta_k`
/// gives `q_k = lambda theta_k` with `lambda` the positive root of
/// `gamma T lambda^2 + lambda - W gamma / (2 ln 2) = 0`, `T = sum n_k theta_k`.
/// Every IR binds, so the DAP's utility equals the welfare.
pub fn complete_info_contract(
    counts: &Composition,
    profile: &TypeProfile,
    gamma: f64,
    bandwidth_w: f64,
) -> Result<CompleteInfoSolution> {
    check_len(profile.k(), counts.k())?;
    let thetas = profile.thetas();
    let t: f64 = counts
        .counts()
        .iter()
        .zip(thetas)
        .map(|(&n, th)| n as f64 * th)
        .sum();
    if t == 0.0 {
        let zeros = vec![0.0; thetas.len()];
        return Ok(CompleteInfoSolution {
            q: zeros.clone(),
            pi: zeros,
            lambda: 0.0,
            welfare: 0.0,
        });
    }
    // (-1 + sqrt(1 + s)) / (2 gamma T) rewritten to avoid cancellation for small s.
    let s = 2.0 * gamma * gamma * t * bandwidth_w / LN_2;
    let lambda = gamma * bandwidth_w / LN_2 / (1.0 + (1.0 + s).sqrt());
    let q: Vec<f64> = thetas.iter().map(|th| lambda * th).collect();
    let pi = q.iter().zip(thetas).map(|(q, th)| q * q / th).collect();
    let welfare = bandwidth_w * (gamma * lambda * t).ln_1p() / LN_2 - lambda * lambda * t;
    Ok(CompleteInfoSolution {
        q,
        pi,
        lambda,
        welfare,
    })
}

/// Expected first-best welfare, re-optimizing for every realized composition.
pub fn expected_complete_info_welfare(market: &Market) -> Result<f64> {
    let mut total = 0.0;
    for wc in market.compositions() {
        let sol = complete_info_contract(
            &wc.composition,
            market.profile(),
            market.gamma(),
            market.bandwidth_w(),
        )?;
        total += wc.prob * sol.welfare;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceSearchConfig {
    /// Initial upper end of the price bracket, doubled until the objective falls.
    pub initial_upper: f64,
    pub bracket_tol: f64,
    pub max_expansions: usize,
}

impl Default for PriceSearchConfig {
    fn default() -> Self {
        Self {
            initial_upper: 1.0,
            bracket_tol: 1e-10,
            max_expansions: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearPricingSolution {
    pub price: f64,
    pub expected_dap_utility: f64,
    pub expected_welfare: f64,
    pub q_response: Vec<f64>,
}

/// Best response of a type-`theta` EAP to price `price`: argmax of `P q - q^2/theta`.
pub fn best_response(price: f64, theta: f64) -> f64 {
    price * theta / 2.0
}

/// `E[W log2(1 + gamma (P/2) sum n_k theta_k)]`.
fn linear_expected_throughput(price: f64, market: &Market) -> f64 {
    let thetas = market.profile().thetas();
    market
        .compositions()
        .iter()
        .map(|wc| {
            let t: f64 = wc
                .composition
                .counts()
                .iter()
                .zip(thetas)
                .map(|(&n, th)| n as f64 * th)
                .sum();
            wc.prob * market.bandwidth_w() * (market.gamma() * price / 2.0 * t).ln_1p() / LN_2
        })
        .sum()
}

fn mean_type_mass(market: &Market) -> f64 {
    market.n_eaps() as f64 / market.k() as f64 * market.profile().thetas().iter().sum::<f64>()
}

/// DAP's expected utility at price `price`: throughput minus `P^2 (N/K) sum theta / 2`.
pub fn linear_pricing_dap_utility(price: f64, market: &Market) -> f64 {
    linear_expected_throughput(price, market) - price * price * mean_type_mass(market) / 2.0
}

/// Expected social welfare at price `price`: throughput minus energy cost `P^2 (N/K) sum theta / 4`.
pub fn linear_pricing_welfare(price: f64, market: &Market) -> f64 {
    linear_expected_throughput(price, market) - price * price * mean_type_mass(market) / 4.0
}

pub fn linear_pricing_optimize(
    market: &Market,
    cfg: &PriceSearchConfig,
) -> Result<LinearPricingSolution> {
    if !(cfg.initial_upper > 0.0 && cfg.bracket_tol > 0.0) {
        return Err(Error::arg(
            "price search needs a positive initial bracket and tolerance",
        ));
    }
    let f = |p: f64| linear_pricing_dap_utility(p, market);
    let mut upper = cfg.initial_upper;
    let mut expansions = 0;
    while f(2.0 * upper) > f(upper) {
        expansions += 1;
        if expansions > cfg.max_expansions {
            return Err(Error::BracketExpansion(cfg.max_expansions));
        }
        upper *= 2.0;
    }
    let (mut price, mut value) = golden_section_max(f, 0.0, 2.0 * upper, cfg.bracket_tol);
    if f(0.0) >= value {
        price = 0.0;
        value = f(0.0);
    }
    Ok(LinearPricingSolution {
        price,
        expected_dap_utility: value,
        expected_welfare: linear_pricing_welfare(price, market),
        q_response: market
            .profile()
            .thetas()
            .iter()
            .map(|&th| best_response(price, th))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{social_welfare, Contract};

    fn profile(t: &[f64]) -> TypeProfile {
        TypeProfile::new(t.to_vec()).unwrap()
    }

    #[test]
    fn unit_lambda_root() {
        let sol =
            complete_info_contract(&Composition::new(vec![1]), &profile(&[1.0]), 1.0, 1.0).unwrap();
        // lambda (1 + lambda) = 1 / (2 ln 2)
        assert!((sol.lambda * (1.0 + sol.lambda) - 0.5 / LN_2).abs() < 1e-15);
        assert!((sol.lambda - 0.485570).abs() < 1e-6);
    }

    #[test]
    fn empty_market_has_zero_welfare() {
        let sol = complete_info_contract(
            &Composition::new(vec![0, 0]),
            &profile(&[1.0, 2.0]),
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(sol.welfare, 0.0);
        assert_eq!(sol.q, vec![0.0, 0.0]);
        let m = Market::new(profile(&[1.0, 2.0]), 1.0, 1.0, 0).unwrap();
        assert_eq!(expected_complete_info_welfare(&m).unwrap(), 0.0);
    }

    #[test]
    fn full_surplus_extraction_and_welfare_formula() {
        let p = profile(&[0.5, 1.0, 2.0]);
        let counts = Composition::new(vec![2, 0, 1]);
        let sol = complete_info_contract(&counts, &p, 1.3, 2.0).unwrap();
        for ((q, pi), th) in sol.q.iter().zip(&sol.pi).zip(p.thetas()) {
            assert_eq!(*pi, q * q / th);
        }
        let contract = Contract::from_parts(&sol.q, &sol.pi).unwrap();
        let sw = social_welfare(&counts, &contract, &p, 1.3, 2.0).unwrap();
        assert!((sw - sol.welfare).abs() < 1e-14);
    }

    #[test]
    fn single_type_expectation_is_direct() {
        let p = profile(&[1.7]);
        let m = Market::new(p.clone(), 2.0, 1.0, 3).unwrap();
        let direct = complete_info_contract(&Composition::new(vec![3]), &p, 2.0, 1.0).unwrap();
        assert_eq!(expected_complete_info_welfare(&m).unwrap(), direct.welfare);
    }

    #[test]
    fn zero_gamma_prices_at_zero() {
        let m = Market::new(profile(&[1.0, 2.0]), 0.0, 1.0, 2).unwrap();
        let sol = linear_pricing_optimize(&m, &PriceSearchConfig::default()).unwrap();
        assert_eq!(sol.price, 0.0);
        assert_eq!(sol.expected_dap_utility, 0.0);
    }

    #[test]
    fn best_responses_are_strict_maximizers() {
        let m = Market::new(profile(&[0.5, 1.0, 2.0]), 1.5, 1.0, 2).unwrap();
        let sol = linear_pricing_optimize(&m, &PriceSearchConfig::default()).unwrap();
        assert!(sol.price > 0.0);
        for (&q, &th) in sol.q_response.iter().zip(m.profile().thetas()) {
            let u = |x: f64| sol.price * x - x * x / th;
            assert!(u(q + 1e-4) < u(q));
            assert!(u(q - 1e-4) < u(q));
        }
    }

    #[test]
    fn price_is_stationary() {
        let m = Market::new(profile(&[0.5, 1.0, 2.0]), 1.5, 1.0, 2).unwrap();
        let sol = linear_pricing_optimize(&m, &PriceSearchConfig::default()).unwrap();
        let h = 1e-5 * sol.price;
        let d = (linear_pricing_dap_utility(sol.price + h, &m)
            - linear_pricing_dap_utility(sol.price - h, &m))
            / (2.0 * h);
        assert!(d.abs() <= 1e-6, "derivative {d}");
    }

    #[test]
    fn expansion_cap_is_reported() {
        let m = Market::new(profile(&[1.0]), 1.0, 1.0, 1).unwrap();
        let cfg = PriceSearchConfig {
            initial_upper: 1e-9,
            max_expansions: 3,
            ..PriceSearchConfig::default()
        };
        assert_eq!(
            linear_pricing_optimize(&m, &cfg),
            Err(Error::BracketExpansion(3))
        );
    }
}
