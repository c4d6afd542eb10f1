//! Relative-variance estimate for partially observed processes.

use std::cell::RefCell;

use crate::config::FilterConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filters::{alive_filter, frankenfilter_observed, MjpTrialModel, ParticleBuffer, Proposal, DEFAULT_ABORT_GUARD};
use crate::mjp::cle_log_density;
use crate::models::StudyModel;
use crate::parallel::par_map;
use crate::rng::RngStream;
use crate::tuning::{smoothed, solve_s_for_vrel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialVrelOptions {
    pub m_plus: usize,
    pub proposal: Proposal,
}

impl Default for PartialVrelOptions {
    fn default() -> Self {
        Self {
            m_plus: 10_000_000,
            proposal: Proposal::Forward,
        }
    }
}

fn cle_at(model: &StudyModel, z: &[i64], theta: &[f64], data: &Dataset, t: usize) -> Result<f64> {
    cle_log_density(
        &model.network,
        z,
        theta,
        data.observation(t),
        data.obs_matrix(),
        data.interval_length(t),
    )
    .map_err(|e| match e {
        Error::CleUnavailable { .. } => Error::CleUnavailable { interval: t },
        other => other,
    })
}

/// `log((1/n) Σ exp(v))`.
fn log_mean(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + (values.iter().map(|v| (v - max).exp()).sum::<f64>() / values.len() as f64).ln()
}

/// `log ∏_t P̄_t` for one filter run, where `P̄_t` averages the CLE
/// approximation of `p_t` over the `s - 1` particles the interval resamples from.
fn one_replicate(
    model: &StudyModel,
    theta: &[f64],
    data: &Dataset,
    config: &FilterConfig,
    proposal: Proposal,
    s_target: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let big_t = data.len();
    let d = model.network.num_species();
    let mut init_rng = rng.derive(0);
    let mut run_rng = rng.derive(1);

    let mut z = vec![0i64; d];
    let mut first = Vec::with_capacity(s_target - 1);
    for _ in 0..s_target - 1 {
        model.initial.sample_into(&mut z, &mut init_rng);
        first.push(cle_at(model, &z, theta, data, 0)?);
        if model.initial.is_fixed() {
            break;
        }
    }
    let log_pbar = RefCell::new(vec![log_mean(&first)]);
    let failure = RefCell::new(None::<Error>);

    let mut observer = |t: usize, buf: &ParticleBuffer| {
        if t + 1 >= big_t || failure.borrow().is_some() {
            return;
        }
        let mut vals = Vec::with_capacity(s_target - 1);
        for j in 0..buf.usable() {
            if vals.len() == s_target - 1 {
                break;
            }
            if buf.successes[j] > 0.0 {
                match cle_at(model, buf.state(j), theta, data, t + 1) {
                    Ok(v) => vals.push(v),
                    Err(e) => {
                        *failure.borrow_mut() = Some(e);
                        return;
                    }
                }
            }
        }
        let v = if vals.is_empty() { f64::NEG_INFINITY } else { log_mean(&vals) };
        log_pbar.borrow_mut().push(v);
    };
    let mut trials = MjpTrialModel::new(model, theta, data, proposal)?;
    frankenfilter_observed(&mut trials, config, &mut run_rng, Some(&mut observer))?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let log_pbar = log_pbar.into_inner();
    if log_pbar.len() < big_t {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log_pbar.iter().sum())
}

/// `exp{T/(s-2)} · mean(∏ P̄_t²) / mean(∏ P̄_t)² - 1` over `replicates` filter runs.
pub fn vrel_partial_estimate(
    model: &StudyModel,
    theta: &[f64],
    data: &Dataset,
    s_target: u64,
    replicates: usize,
    options: PartialVrelOptions,
    rng: &RngStream,
) -> Result<f64> {
    if replicates < 2 || s_target < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 replicates and s_target >= 3 (got {replicates}, {s_target})"
        )));
    }
    let config = FilterConfig::indicator(s_target as f64, options.m_plus)?;
    let logs = par_map(replicates, |r| {
        one_replicate(model, theta, data, &config, options.proposal, s_target as usize, &mut rng.derive(r as u32))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let squares: Vec<f64> = logs.iter().map(|v| 2.0 * v).collect();
    let log_ratio = log_mean(&squares) - 2.0 * log_mean(&logs);
    let big_t = data.len() as f64;
    Ok((big_t / (s_target as f64 - 2.0) + log_ratio).exp() - 1.0)
}

/// Smallest `s` in `[s_lo, s_hi]` whose smoothed partial-observation relative
/// variance is at most `v_target`.
///
/// Each evaluation averages `smoothing` estimates, each over `replicates`
/// filter runs; estimate `r` at `s` uses stream `rng/s/r`.
#[allow(clippy::too_many_arguments)]
pub fn solve_s_partial_obs(
    model: &StudyModel,
    theta: &[f64],
    data: &Dataset,
    v_target: f64,
    s_lo: u64,
    s_hi: u64,
    replicates: usize,
    smoothing: u32,
    options: PartialVrelOptions,
    rng: &RngStream,
) -> Result<u64> {
    let evaluator = smoothed(
        |s, r| vrel_partial_estimate(model, theta, data, s, replicates, options, &rng.derive(s as u32).derive(r)),
        smoothing,
    );
    solve_s_for_vrel(evaluator, v_target, s_lo.max(3), s_hi)
}

/// Per-interval `p̂_t` from one alive-filter run at `theta` with target `s_pilot`.
pub fn pilot_interval_probabilities(
    model: &StudyModel,
    theta: &[f64],
    data: &Dataset,
    s_pilot: usize,
    proposal: Proposal,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let mut trials = MjpTrialModel::new(model, theta, data, proposal)?;
    let est = alive_filter(&mut trials, s_pilot, DEFAULT_ABORT_GUARD, rng)?;
    Ok(est.per_interval.iter().map(|r| r.p_hat()).collect())
}
