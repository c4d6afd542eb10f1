//! Pseudo-marginal Metropolis–Hastings on the log-parameter scale.

mod ess;
mod pilot;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dist::std_normal;
use crate::error::{Error, Result};
use crate::estimator::LikelihoodEstimator;
use crate::parallel::par_map;
use crate::rng::RngStream;

pub use ess::{ess_multivariate, ess_univariate};
pub use pilot::{pilot_workflow, PilotOptions, PilotReport};

/// Classical optimal random-walk scale `2.38² / d`.
pub fn default_gamma(d: usize) -> f64 {
    2.38 * 2.38 / d as f64
}

/// Gaussian random-walk innovation `N(0, γ Σ)` on `log θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalConfig {
    dim: usize,
    cov: Vec<f64>,
    gamma: f64,
    chol: Vec<f64>,
}

impl ProposalConfig {
    /// `cov` is row-major `d × d`; it must be symmetric positive definite.
    pub fn new(cov: Vec<f64>, dim: usize, gamma: f64) -> Result<Self> {
        if cov.len() != dim * dim || dim == 0 {
            return Err(Error::InvalidConfig(format!("covariance must be {dim} x {dim}")));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        let m = DMatrix::from_row_slice(dim, dim, &cov);
        if (&m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
            return Err(Error::InvalidConfig("innovation covariance is not symmetric".into()));
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::InvalidConfig("innovation covariance is not positive definite".into()))?;
        let l = chol.l();
        Ok(Self {
            dim,
            cov,
            gamma,
            chol: (0..dim * dim).map(|k| l[(k / dim, k % dim)]).collect(),
        })
    }

    pub fn diagonal(variances: &[f64], gamma: f64) -> Result<Self> {
        let d = variances.len();
        let mut cov = vec![0.0; d * d];
        for (i, v) in variances.iter().enumerate() {
            cov[i * d + i] = *v;
        }
        Self::new(cov, d, gamma)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn covariance(&self) -> &[f64] {
        &self.cov
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.cov.clone(), self.dim, gamma)
    }

    fn innovation(&self, rng: &mut RngStream, z: &mut [f64], out: &mut [f64]) {
        let d = self.dim;
        for v in z.iter_mut() {
            *v = std_normal(rng);
        }
        let g = self.gamma.sqrt();
        for i in 0..d {
            out[i] = g * (0..=i).map(|j| self.chol[i * d + j] * z[j]).sum::<f64>();
        }
    }
}

/// Output of one PMMH run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub dim: usize,
    /// Row-major `iterations × dim`.
    pub draws: Vec<f64>,
    pub log_liks: Vec<f64>,
    pub accepted: Vec<bool>,
    /// Simulations spent on the likelihood estimate at each iteration.
    pub cost: Vec<u64>,
    pub elapsed_secs: f64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.log_liks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_liks.is_empty()
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.draws[i * self.dim + j]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.len() as f64
    }

    /// Diagnostics after discarding the leading `burn_in` fraction of draws.
    pub fn summary(&self, burn_in: f64) -> Result<ChainSummary> {
        let start = ((self.len() as f64) * burn_in.clamp(0.0, 0.99)).floor() as usize;
        let n = self.len() - start;
        if n < 10 {
            return Err(Error::InvalidConfig(format!("only {n} draws after burn-in")));
        }
        let kept = &self.draws[start * self.dim..];
        let mut mean = vec![0.0; self.dim];
        let mut sd = vec![0.0; self.dim];
        let mut ess = vec![0.0; self.dim];
        for j in 0..self.dim {
            let col: Vec<f64> = (0..n).map(|i| kept[i * self.dim + j]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            mean[j] = m;
            sd[j] = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            ess[j] = ess_univariate(&col);
        }
        let multivariate_ess = if self.dim == 1 {
            ess[0]
        } else {
            ess_multivariate(kept, self.dim).unwrap_or(f64::NAN)
        };
        let secs = self.elapsed_secs.max(1e-9);
        Ok(ChainSummary {
            iterations: self.len(),
            burn_in: start,
            mean,
            sd,
            ess,
            multivariate_ess,
            acceptance_rate: self.acceptance_rate(),
            elapsed_secs: self.elapsed_secs,
            ess_per_sec: multivariate_ess / secs,
            mean_cost: self.cost.iter().sum::<u64>() as f64 / self.len() as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub iterations: usize,
    pub burn_in: usize,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub ess: Vec<f64>,
    pub multivariate_ess: f64,
    pub acceptance_rate: f64,
    pub elapsed_secs: f64,
    pub ess_per_sec: f64,
    pub mean_cost: f64,
}

impl ChainSummary {
    /// `mean ± 3 sd / √ESS` for component `j`.
    pub fn interval(&self, j: usize) -> (f64, f64) {
        let half = 3.0 * self.sd[j] / self.ess[j].sqrt();
        (self.mean[j] - half, self.mean[j] + half)
    }

    /// Whether the 3-standard-error intervals of component `j` intersect.
    pub fn overlaps(&self, other: &ChainSummary, j: usize) -> bool {
        let (a0, a1) = self.interval(j);
        let (b0, b1) = other.interval(j);
        a0 <= b1 && b0 <= a1
    }
}

fn log_target(log_lik: f64, log_prior: f64, theta: &[f64]) -> f64 {
    log_lik + log_prior + theta.iter().map(|t| t.ln()).sum::<f64>()
}

/// Runs `iterations` PMMH steps from `theta0`.
///
/// Iteration `i` estimates the likelihood with stream `rng/1/i`; proposals and
/// acceptance draws use `rng/0`. A rejected step repeats the previous draw and
/// its stored log-likelihood estimate.
pub fn pmmh_run<E, P>(
    estimator: &E,
    data: &Dataset,
    prior: P,
    theta0: &[f64],
    proposal: &ProposalConfig,
    iterations: usize,
    rng: &RngStream,
) -> Result<Chain>
where
    E: LikelihoodEstimator + ?Sized,
    P: Fn(&[f64]) -> f64,
{
    let d = theta0.len();
    if proposal.dim() != d {
        return Err(Error::InvalidConfig(format!("proposal has dimension {}, theta0 {d}", proposal.dim())));
    }
    let lp0 = prior(theta0);
    if !lp0.is_finite() || theta0.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidConfig(format!("prior density at theta0 = {theta0:?} is zero")));
    }
    if iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    let start = Instant::now();
    let mut chain_rng = rng.derive(0);
    let est_root = rng.derive(1);
    let mut theta = theta0.to_vec();
    let first = estimator.estimate(&theta, data, &mut est_root.derive(0))?;
    let mut ll = first.log_p_hat;
    let mut lt = log_target(ll, lp0, &theta);

    let mut chain = Chain {
        dim: d,
        draws: Vec::with_capacity(iterations * d),
        log_liks: Vec::with_capacity(iterations),
        accepted: Vec::with_capacity(iterations),
        cost: Vec::with_capacity(iterations),
        elapsed_secs: 0.0,
    };
    let mut z = vec![0.0; d];
    let mut eps = vec![0.0; d];
    let mut prop = vec![0.0; d];
    for i in 1..=iterations {
        proposal.innovation(&mut chain_rng, &mut z, &mut eps);
        for k in 0..d {
            prop[k] = theta[k] * eps[k].exp();
        }
        let u = chain_rng.uniform_open0();
        let lp = prior(&prop);
        let mut accepted = false;
        let mut cost = 0;
        if lp > f64::NEG_INFINITY {
            let est = estimator.estimate(&prop, data, &mut est_root.derive(i as u32))?;
            cost = est.total_simulations;
            if est.log_p_hat > f64::NEG_INFINITY {
                let lt_new = log_target(est.log_p_hat, lp, &prop);
                if u.ln() < lt_new - lt {
                    theta.copy_from_slice(&prop);
                    ll = est.log_p_hat;
                    lt = lt_new;
                    accepted = true;
                }
            }
        }
        chain.draws.extend_from_slice(&theta);
        chain.log_liks.push(ll);
        chain.accepted.push(accepted);
        chain.cost.push(cost);
    }
    chain.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(chain)
}

/// Spread of `log P̂` at a fixed parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEstimateSpread {
    /// Sample variance over the finite replicates.
    pub variance: f64,
    /// Fraction of replicates returning a zero estimate.
    pub zero_fraction: f64,
    pub mean_cost: f64,
}

/// Variance of the finite `log P̂` replicates and the fraction of zero estimates.
pub fn var_log_phat<E: LikelihoodEstimator + ?Sized>(
    estimator: &E,
    data: &Dataset,
    theta: &[f64],
    replicates: usize,
    rng: &RngStream,
) -> Result<LogEstimateSpread> {
    if replicates < 2 {
        return Err(Error::InvalidConfig("var_log_phat needs at least 2 replicates".into()));
    }
    let results = par_map(replicates, |r| estimator.estimate(theta, data, &mut rng.derive(r as u32)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let finite: Vec<f64> = results.iter().map(|e| e.log_p_hat).filter(|v| v.is_finite()).collect();
    let zero_fraction = 1.0 - finite.len() as f64 / replicates as f64;
    if finite.is_empty() {
        return Err(Error::EstimatorDead { theta: theta.to_vec() });
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let variance = if finite.len() < 2 {
        f64::INFINITY
    } else {
        finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    Ok(LogEstimateSpread {
        variance,
        zero_fraction,
        mean_cost: results.iter().map(|e| e.total_simulations as f64).sum::<f64>() / replicates as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ObsMatrix;
    use crate::estimate::LikelihoodEstimate;
    use crate::estimator::FnEstimator;

    fn dummy_data() -> Dataset {
        Dataset::new(vec![1.0], vec![vec![0]], ObsMatrix::identity(1)).unwrap()
    }

    #[test]
    fn constant_estimator_flat_log_prior_accepts_everything() {
        let est = FnEstimator::new("const", |_: &[f64], _: &Dataset, _: &mut RngStream| Ok(LikelihoodEstimate::exact(-3.0)));
        // Density 1/θ is flat in log θ, cancelling the Jacobian.
        let prior = |t: &[f64]| -t[0].ln();
        let prop = ProposalConfig::diagonal(&[1.0], 1.0).unwrap();
        let chain = pmmh_run(&est, &dummy_data(), prior, &[1.0], &prop, 500, &RngStream::new(1)).unwrap();
        assert!(chain.accepted.iter().all(|&a| a));
    }

    #[test]
    fn rejected_steps_repeat_state_bitwise() {
        let est = FnEstimator::new("noisy", |t: &[f64], _: &Dataset, r: &mut RngStream| {
            Ok(LikelihoodEstimate::exact(-(t[0] - 1.0).powi(2) * 50.0 + std_normal(r)))
        });
        let prop = ProposalConfig::diagonal(&[0.5], 1.0).unwrap();
        let chain = pmmh_run(&est, &dummy_data(), |_| 0.0, &[1.0], &prop, 2000, &RngStream::new(2)).unwrap();
        assert!(chain.accepted.iter().any(|a| !a));
        for i in 1..chain.len() {
            if !chain.accepted[i] {
                assert_eq!(chain.draw(i), chain.draw(i - 1));
                assert_eq!(chain.log_liks[i].to_bits(), chain.log_liks[i - 1].to_bits());
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let make = |shift: f64| {
            FnEstimator::new("shifted", move |t: &[f64], _: &Dataset, r: &mut RngStream| {
                Ok(LikelihoodEstimate::exact(-(t[0] - 1.0).powi(2) * 10.0 + 0.3 * std_normal(r) + shift))
            })
        };
        let prop = ProposalConfig::diagonal(&[0.2], 1.0).unwrap();
        let a = pmmh_run(&make(0.0), &dummy_data(), |_| 0.0, &[1.0], &prop, 1000, &RngStream::new(3)).unwrap();
        let b = pmmh_run(&make(123.0), &dummy_data(), |_| 0.0, &[1.0], &prop, 1000, &RngStream::new(3)).unwrap();
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.draws, b.draws);
    }

    #[test]
    fn zero_estimates_are_rejected() {
        let est = FnEstimator::new("dead", |t: &[f64], _: &Dataset, _: &mut RngStream| {
            Ok(LikelihoodEstimate::exact(if t[0] == 1.0 { 0.0 } else { f64::NEG_INFINITY }))
        });
        let prop = ProposalConfig::diagonal(&[1.0], 1.0).unwrap();
        let chain = pmmh_run(&est, &dummy_data(), |_| 0.0, &[1.0], &prop, 100, &RngStream::new(4)).unwrap();
        assert!(chain.accepted.iter().all(|a| !a));
    }

    #[test]
    fn invalid_start() {
        let est = FnEstimator::new("c", |_: &[f64], _: &Dataset, _: &mut RngStream| Ok(LikelihoodEstimate::exact(0.0)));
        let prop = ProposalConfig::diagonal(&[1.0], 1.0).unwrap();
        let r = pmmh_run(&est, &dummy_data(), |_| f64::NEG_INFINITY, &[1.0], &prop, 10, &RngStream::new(0));
        assert!(r.is_err());
        assert!(ProposalConfig::new(vec![1.0, 2.0, 2.0, 1.0], 2, 1.0).is_err());
    }

    #[test]
    fn var_log_phat_cases() {
        let data = dummy_data();
        let det = FnEstimator::new("det", |_: &[f64], _: &Dataset, _: &mut RngStream| Ok(LikelihoodEstimate::exact(-2.0)));
        let s = var_log_phat(&det, &data, &[1.0], 10, &RngStream::new(0)).unwrap();
        assert_eq!((s.variance, s.zero_fraction), (0.0, 0.0));

        let lognormal =
            FnEstimator::new("ln", |_: &[f64], _: &Dataset, r: &mut RngStream| Ok(LikelihoodEstimate::exact(std_normal(r) - 0.5)));
        let n = 10_000;
        let s = var_log_phat(&lognormal, &data, &[1.0], n, &RngStream::new(1)).unwrap();
        // Var of the sample variance of N(0,1) is 2/(n-1).
        assert!((s.variance - 1.0).abs() < 3.0 * (2.0 / (n as f64 - 1.0)).sqrt(), "{}", s.variance);

        let dead = FnEstimator::new("dead", |_: &[f64], _: &Dataset, _: &mut RngStream| {
            Ok(LikelihoodEstimate::exact(f64::NEG_INFINITY))
        });
        assert!(matches!(
            var_log_phat(&dead, &data, &[1.0], 5, &RngStream::new(0)),
            Err(Error::EstimatorDead { .. })
        ));
    }
}
