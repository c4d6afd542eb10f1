use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{default_gamma, pmmh_run, var_log_phat, ChainSummary, ProposalConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimator::LikelihoodEstimator;
use crate::rng::RngStream;

/// Knob search and pilot-chain settings.
#[derive(Clone, Debug)]
pub struct PilotOptions {
    /// Inclusive bracket for the size knob (`m_plus`, `n_particles`, ...).
    pub knob_lo: u64,
    pub knob_hi: u64,
    /// Replicates per `var_log_phat` evaluation.
    pub replicates: usize,
    /// Accept a knob when the log-estimate variance is at most this.
    pub max_variance: f64,
    /// Accept a knob only when at most this fraction of replicates are zero.
    pub max_zero_fraction: f64,
    /// Bisection stops once `hi / lo` falls below this ratio.
    pub knob_ratio_tol: f64,
    pub pilot_iterations: usize,
    pub burn_in: f64,
    /// Proposal for the pilot chain; defaults to `N(0, 0.01 I)` scaled by `2.38²/d`.
    pub pilot_proposal: Option<ProposalConfig>,
    /// Scale for the main-run proposal; defaults to `2.38²/d`.
    pub gamma: Option<f64>,
}

impl Default for PilotOptions {
    fn default() -> Self {
        Self {
            knob_lo: 2,
            knob_hi: 1 << 24,
            replicates: 100,
            max_variance: 1.25,
            max_zero_fraction: 0.01,
            knob_ratio_tol: 1.1,
            pilot_iterations: 2000,
            burn_in: 0.1,
            pilot_proposal: None,
            gamma: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PilotReport {
    /// Largest knob over the parameter samples.
    pub knob: u64,
    pub per_theta_knobs: Vec<u64>,
    /// Pilot posterior mean of θ; the start point for the main run.
    pub start: Vec<f64>,
    /// Row-major empirical covariance of `log θ` from the pilot chain.
    pub log_theta_cov: Vec<f64>,
    pub gamma: f64,
    pub pilot_summary: ChainSummary,
    pub knob_search_secs: f64,
    pub pilot_chain_secs: f64,
}

impl PilotReport {
    pub fn proposal(&self) -> Result<ProposalConfig> {
        ProposalConfig::new(self.log_theta_cov.clone(), self.start.len(), self.gamma)
    }

    /// CPU time of the whole pilot stage.
    pub fn pilot_secs(&self) -> f64 {
        self.knob_search_secs + self.pilot_chain_secs
    }
}

/// Smallest knob in the bracket, up to `knob_ratio_tol`, whose estimator has
/// `Var(log P̂) ≤ max_variance` and few zero estimates at `theta`.
fn knob_for_theta<F, E>(family: &F, data: &Dataset, theta: &[f64], opts: &PilotOptions, rng: &RngStream) -> Result<u64>
where
    F: Fn(u64) -> Result<E>,
    E: LikelihoodEstimator,
{
    let mut calls = 0u32;
    let mut acceptable = |knob: u64| -> Result<bool> {
        let est = family(knob)?;
        calls += 1;
        match var_log_phat(&est, data, theta, opts.replicates, &rng.derive(calls)) {
            Ok(s) => Ok(s.variance <= opts.max_variance && s.zero_fraction <= opts.max_zero_fraction),
            Err(Error::EstimatorDead { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let (mut lo, mut hi) = (opts.knob_lo.max(1), opts.knob_hi);
    if lo > hi {
        return Err(Error::InvalidConfig(format!("knob bracket [{lo}, {hi}] is empty")));
    }
    if acceptable(lo)? {
        return Ok(lo);
    }
    if !acceptable(hi)? {
        return Err(Error::PilotBracket {
            theta: theta.to_vec(),
            reason: format!("variance target not met at the upper knob {hi}"),
        });
    }
    while hi - lo > 1 && (hi as f64) / (lo as f64) > opts.knob_ratio_tol {
        let mid = ((lo as f64 * hi as f64).sqrt().round() as u64).clamp(lo + 1, hi - 1);
        if acceptable(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Sizes the estimator at each parameter sample, runs a pilot chain at the
/// largest knob, and returns the main-run start point and proposal.
pub fn pilot_workflow<F, E, P>(
    family: F,
    data: &Dataset,
    prior: P,
    theta_samples: &[Vec<f64>],
    opts: &PilotOptions,
    rng: &RngStream,
) -> Result<PilotReport>
where
    F: Fn(u64) -> Result<E>,
    E: LikelihoodEstimator,
    P: Fn(&[f64]) -> f64,
{
    let Some(first) = theta_samples.first() else {
        return Err(Error::InvalidConfig("pilot needs at least one parameter sample".into()));
    };
    let d = first.len();
    let search_start = Instant::now();
    let knob_rng = rng.derive(0);
    let per_theta_knobs = theta_samples
        .iter()
        .enumerate()
        .map(|(i, th)| knob_for_theta(&family, data, th, opts, &knob_rng.derive(i as u32)))
        .collect::<Result<Vec<_>>>()?;
    let knob = *per_theta_knobs.iter().max().expect("nonempty");
    let knob_search_secs = search_start.elapsed().as_secs_f64();

    let pilot_proposal = match &opts.pilot_proposal {
        Some(p) => p.clone(),
        None => ProposalConfig::diagonal(&vec![0.01; d], default_gamma(d))?,
    };
    let chain_start = Instant::now();
    let est = family(knob)?;
    let chain = pmmh_run(&est, data, &prior, first, &pilot_proposal, opts.pilot_iterations, &rng.derive(1))?;
    let pilot_chain_secs = chain_start.elapsed().as_secs_f64();
    let pilot_summary = chain.summary(opts.burn_in)?;

    let start_idx = ((chain.len() as f64) * opts.burn_in).floor() as usize;
    let n = chain.len() - start_idx;
    let logs = DMatrix::from_fn(n, d, |i, j| chain.draw(start_idx + i)[j].ln());
    let mean = logs.row_mean();
    let centred = DMatrix::from_fn(n, d, |i, j| logs[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / (n as f64 - 1.0);
    let mut log_theta_cov: Vec<f64> = (0..d * d).map(|k| cov[(k / d, k % d)]).collect();
    // A pilot that never moved gives a singular covariance; keep the pilot proposal's.
    if ProposalConfig::new(log_theta_cov.clone(), d, 1.0).is_err() {
        log_theta_cov = pilot_proposal.covariance().to_vec();
    }

    let mut start = pilot_summary.mean.clone();
    if !prior(&start).is_finite() {
        start = chain.draw(chain.len() - 1).to_vec();
    }
    Ok(PilotReport {
        knob,
        per_theta_knobs,
        start,
        log_theta_cov,
        gamma: opts.gamma.unwrap_or_else(|| default_gamma(d)),
        pilot_summary,
        knob_search_secs,
        pilot_chain_secs,
    })
}
