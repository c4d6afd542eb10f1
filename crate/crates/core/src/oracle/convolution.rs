//! Exact forward recursion for the tau-leap transition law on small state spaces.

use std::collections::BTreeMap;

use crate::dataset::ObsMatrix;
use crate::dist::ln_poisson_pmf;
use crate::error::{Error, Result};
use crate::mjp::{steps_for, ReactionNetwork};

/// Maximum number of distinct states tracked per step.
pub const STATE_CAP: usize = 10_000;

/// Poisson kernels are cut once this much mass is covered.
const KERNEL_MASS: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convolution {
    /// `P(Fᵀ X_t = y_t | x_prev)` under the tau-leap chain.
    pub probability: f64,
    /// Probability mass dropped by kernel truncation; bounds the absolute error.
    pub truncation_deficit: f64,
}

fn truncated_kernel(lambda: f64) -> Vec<f64> {
    if !(lambda > 0.0) {
        return vec![1.0];
    }
    let mut out = Vec::new();
    let mut cdf = 0.0;
    let mut k = 0u64;
    while cdf < KERNEL_MASS {
        let p = ln_poisson_pmf(k, lambda).exp();
        out.push(p);
        cdf += p;
        k += 1;
        if k as f64 > lambda + 50.0 * lambda.sqrt() + 50.0 {
            break;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn tau_leap_exact_convolution(
    net: &ReactionNetwork,
    x_prev: &[i64],
    theta: &[f64],
    dt: f64,
    tau: f64,
    y_t: &[i64],
    obs: &ObsMatrix,
) -> Result<Convolution> {
    let n = steps_for(dt, tau)?;
    let r = net.num_reactions();
    let mut layer: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    layer.insert(x_prev.to_vec(), 1.0);
    let mut deficit = 0.0;
    let mut h = vec![0.0; r];
    for _ in 0..n {
        let mut next: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (x, &px) in &layer {
            net.hazards_into(x, theta, &mut h);
            let kernels: Vec<Vec<f64>> = h.iter().map(|&hi| truncated_kernel(hi * tau)).collect();
            let covered: f64 = kernels.iter().map(|k| k.iter().sum::<f64>()).product();
            deficit += px * (1.0 - covered).max(0.0);
            // Odometer over the reaction counts.
            let mut counts = vec![0usize; r];
            loop {
                let mut p = px;
                let mut y = x.clone();
                for i in 0..r {
                    p *= kernels[i][counts[i]];
                    if counts[i] > 0 {
                        net.fire(&mut y, i, counts[i] as i64);
                    }
                }
                *next.entry(y).or_insert(0.0) += p;
                if next.len() > STATE_CAP {
                    return Err(Error::StateSpaceBlowup { cap: STATE_CAP });
                }
                let mut i = 0;
                while i < r {
                    counts[i] += 1;
                    if counts[i] < kernels[i].len() {
                        break;
                    }
                    counts[i] = 0;
                    i += 1;
                }
                if i == r {
                    break;
                }
            }
        }
        layer = next;
    }
    let probability = layer.iter().filter(|(x, _)| obs.matches(x, y_t)).map(|(_, p)| p).sum();
    Ok(Convolution {
        probability,
        truncation_deficit: deficit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mjp::tau_leap_simulate;
    use crate::models::{build_model, ModelName};
    use crate::rng::RngStream;

    #[test]
    fn zero_hazards_are_an_indicator() {
        let net = ReactionNetwork::new(vec![vec![1]], 0, |_, _, h| h.fill(0.0));
        let obs = ObsMatrix::identity(1);
        assert_eq!(tau_leap_exact_convolution(&net, &[4], &[], 1.0, 0.5, &[4], &obs).unwrap().probability, 1.0);
        assert_eq!(tau_leap_exact_convolution(&net, &[4], &[], 1.0, 0.5, &[5], &obs).unwrap().probability, 0.0);
    }

    #[test]
    fn single_step_is_the_kernel() {
        let m = build_model(ModelName::Death).unwrap();
        let c = tau_leap_exact_convolution(&m.network, &[100], &[0.01], 1.0, 1.0, &[97], &ObsMatrix::identity(1)).unwrap();
        let direct = ln_poisson_pmf(3, 1.0).exp();
        assert!((c.probability - direct).abs() < 1e-15);
    }

    #[test]
    fn matches_monte_carlo() {
        let m = build_model(ModelName::Death).unwrap();
        let obs = ObsMatrix::identity(1);
        let c = tau_leap_exact_convolution(&m.network, &[100], &[0.01], 1.0, 0.5, &[99], &obs).unwrap();
        let mut rng = RngStream::new(8);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| tau_leap_simulate(&m.network, &[100], &[0.01], 0.0, 1.0, 0.5, &mut rng).unwrap().end_state[0] == 99)
            .count();
        let f = hits as f64 / n as f64;
        let se = (c.probability * (1.0 - c.probability) / n as f64).sqrt();
        assert!((f - c.probability).abs() < 3.0 * se, "{f} vs {}", c.probability);
        assert!(c.truncation_deficit < 1e-10);
    }

    #[test]
    fn blowup_is_reported() {
        let m = build_model(ModelName::Lv).unwrap();
        let r = tau_leap_exact_convolution(&m.network, &[500, 500], &[0.5, 0.0025, 0.3], 1.0, 0.25, &[500, 500], &ObsMatrix::identity(2));
        assert!(matches!(r, Err(Error::StateSpaceBlowup { .. })));
    }
}
