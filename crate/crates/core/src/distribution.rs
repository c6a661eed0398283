//! Compositions of `N` EAPs into `K` equally likely types and their
//! multinomial weights.

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::model::{dap_utility, Contract, TypeProfile};

/// Per-type EAP counts `(n_1, ..., n_K)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Composition {
    counts: Vec<u32>,
}

impl Composition {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn n_total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedComposition {
    pub composition: Composition,
    pub prob: f64,
}

/// All compositions of `n_total` into `k_types` nonnegative parts, in
/// lexicographic order of the count vector.
pub fn enumerate_compositions(n_total: u32, k_types: usize) -> Result<Vec<Composition>> {
    if k_types == 0 {
        return Err(Error::arg("k_types must be at least 1"));
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; k_types];
    fill(&mut current, 0, n_total, &mut out);
    Ok(out)
}

fn fill(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<Composition>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(Composition::new(current.to_vec()));
        return;
    }
    for n in 0..=remaining {
        current[pos] = n;
        fill(current, pos + 1, remaining - n, out);
    }
}

/// Number of compositions, `C(N + K - 1, K - 1)`.
pub fn composition_count(n_total: u32, k_types: usize) -> u64 {
    if k_types == 0 {
        return 0;
    }
    let (top, r) = (n_total as u64 + k_types as u64 - 1, k_types as u64 - 1);
    let r = r.min(top - r);
    (1..=r).fold(1u64, |acc, i| acc * (top - r + i) / i)
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Probability of `comp` when each EAP independently takes one of the
/// `K = comp.k()` types uniformly: `N! / (n_1! ... n_K! K^N)`, evaluated in
/// log space.
pub fn multinomial_prob(comp: &Composition) -> f64 {
    let n = comp.n_total();
    let log_p = ln_factorial(n)
        - comp.counts().iter().map(|&c| ln_factorial(c)).sum::<f64>()
        - n as f64 * (comp.k() as f64).ln();
    log_p.exp()
}

pub fn weighted_compositions(n_total: u32, k_types: usize) -> Result<Vec<WeightedComposition>> {
    Ok(enumerate_compositions(n_total, k_types)?
        .into_iter()
        .map(|composition| WeightedComposition {
            prob: multinomial_prob(&composition),
            composition,
        })
        .collect())
}

/// Expected DAP utility of the menu `(q, pi)` over every composition of
/// `n_total` EAPs.
pub fn expected_dap_utility(
    q: &[f64],
    pi: &[f64],
    profile: &TypeProfile,
    gamma: f64,
    bandwidth_w: f64,
    n_total: u32,
) -> Result<f64> {
    check_len(profile.k(), q.len())?;
    check_len(profile.k(), pi.len())?;
    let contract = Contract::from_parts(q, pi)?;
    let mut total = 0.0;
    for wc in weighted_compositions(n_total, profile.k())? {
        total += wc.prob * dap_utility(&wc.composition, &contract, gamma, bandwidth_w)?;
    }
    Ok(total)
}

/// `(N/K) * sum_k pi_k`, the expected total reward under uniform types.
pub fn expected_reward(pi: &[f64], n_total: u32) -> f64 {
    n_total as f64 / pi.len() as f64 * pi.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(v: &[Composition]) -> Vec<Vec<u32>> {
        v.iter().map(|c| c.counts().to_vec()).collect()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(
            counts(&enumerate_compositions(2, 2).unwrap()),
            vec![vec![0, 2], vec![1, 1], vec![2, 0]]
        );
        assert_eq!(enumerate_compositions(5, 10).unwrap().len(), 2002);
        assert_eq!(
            counts(&enumerate_compositions(0, 3).unwrap()),
            vec![vec![0, 0, 0]]
        );
        assert!(enumerate_compositions(3, 0).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic_and_unique() {
        let all = counts(&enumerate_compositions(4, 4).unwrap());
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(all.iter().all(|c| c.iter().sum::<u32>() == 4));
    }

    #[test]
    fn count_matches_enumeration() {
        for n in 0..=12 {
            for k in 1..=10 {
                assert_eq!(
                    enumerate_compositions(n, k).unwrap().len() as u64,
                    composition_count(n, k),
                    "N={n} K={k}"
                );
            }
        }
        assert_eq!(composition_count(5, 10), 2002);
    }

    #[test]
    fn multinomial_examples() {
        let p = multinomial_prob(&Composition::new(vec![1, 1, 0, 0, 0]));
        assert!((p - 0.08).abs() < 1e-15);
        let p = multinomial_prob(&Composition::new(vec![2, 0, 0, 0, 0]));
        assert!((p - 0.04).abs() < 1e-15);
    }

    #[test]
    fn multinomial_large_n_is_finite() {
        let p = multinomial_prob(&Composition::new(vec![100, 100]));
        assert!(p > 0.0 && p < 1.0);
        // C(200, 100) / 2^200
        let exact = (ln_factorial(200) - 2.0 * ln_factorial(100) - 200.0 * 2f64.ln()).exp();
        assert!((p - exact).abs() < 1e-15);
    }

    #[test]
    fn probabilities_normalize_and_mean_is_uniform() {
        for n in 0..=12 {
            for k in 1..=10 {
                if composition_count(n, k) > 50_000 {
                    continue;
                }
                let wcs = weighted_compositions(n, k).unwrap();
                let total: f64 = wcs.iter().map(|w| w.prob).sum();
                assert!((total - 1.0).abs() < 1e-12, "N={n} K={k} sum={total}");
                for j in 0..k {
                    let mean: f64 = wcs
                        .iter()
                        .map(|w| w.prob * w.composition.counts()[j] as f64)
                        .sum();
                    assert!((mean - n as f64 / k as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn expected_utility_examples() {
        let p2 = TypeProfile::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            expected_dap_utility(&[0.0, 0.0], &[0.0, 0.0], &p2, 1.0, 1.0, 2).unwrap(),
            0.0
        );
        let v = expected_dap_utility(&[1.0, 1.0], &[0.0, 0.0], &p2, 1.0, 1.0, 2).unwrap();
        assert!((v - 3f64.log2()).abs() < 1e-14);

        let p1 = TypeProfile::new(vec![3.0]).unwrap();
        let v = expected_dap_utility(&[0.7], &[0.2], &p1, 2.0, 1.5, 4).unwrap();
        let direct = 1.5 * (1.0 + 2.0 * 4.0 * 0.7f64).log2() - 4.0 * 0.2;
        assert!((v - direct).abs() < 1e-14);

        assert!(expected_dap_utility(&[1.0], &[0.0, 0.0], &p2, 1.0, 1.0, 2).is_err());
    }

    #[test]
    fn reward_part_matches_closed_form() {
        let profile = TypeProfile::new(vec![1.0, 1.5, 2.5, 4.0]).unwrap();
        let pi = [0.3, 0.9, 1.4, 2.2];
        let q = [0.0; 4];
        let v = expected_dap_utility(&q, &pi, &profile, 1.0, 1.0, 3).unwrap();
        assert!((v + expected_reward(&pi, 3)).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn expected_utility_concave_in_q(
                a in prop::collection::vec(0.0f64..2.0, 3),
                b in prop::collection::vec(0.0f64..2.0, 3),
                t in 0.0f64..1.0,
            ) {
                let profile = TypeProfile::new(vec![1.0, 2.0, 3.0]).unwrap();
                let pi = [0.1, 0.2, 0.3];
                let f = |q: &[f64]| expected_dap_utility(q, &pi, &profile, 1.3, 1.0, 3).unwrap();
                let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
                prop_assert!(f(&mid) >= t * f(&a) + (1.0 - t) * f(&b) - 1e-12);
            }

            #[test]
            fn expected_utility_decreasing_in_reward(
                q in prop::collection::vec(0.0f64..2.0, 3),
                pi in prop::collection::vec(0.0f64..2.0, 3),
                j in 0usize..3,
                bump in 1e-3f64..1.0,
            ) {
                let profile = TypeProfile::new(vec![1.0, 2.0, 3.0]).unwrap();
                let base = expected_dap_utility(&q, &pi, &profile, 1.3, 1.0, 2).unwrap();
                let mut higher = pi.clone();
                higher[j] += bump;
                let bumped = expected_dap_utility(&q, &higher, &profile, 1.3, 1.0, 2).unwrap();
                prop_assert!(bumped < base);
            }
        }
    }
}
