use crate::dataset::Dataset;
use crate::dist::ln_binomial_pmf;
use crate::error::{Error, Result};
use crate::estimate::{IntervalRecord, LikelihoodEstimate, StopKind};
use crate::estimator::LikelihoodEstimator;
use crate::rng::RngStream;

fn interval_log_probs(theta: f64, data: &Dataset, x0: i64) -> Vec<f64> {
    let mut prev = x0;
    (0..data.len())
        .map(|t| {
            let x = data.observation(t)[0];
            let lp = if x < 0 || x > prev || theta <= 0.0 {
                f64::NEG_INFINITY
            } else {
                let surv = (-theta * data.interval_length(t)).exp();
                ln_binomial_pmf(x as u64, prev as u64, surv)
            };
            prev = x;
            lp
        })
        .collect()
}

/// `Σ_t log Bin(x_t; x_{t-1}, e^{-θ Δt})` for a completely observed pure death process.
///
/// An increase between consecutive counts has zero probability and yields `-inf`.
pub fn exact_death_likelihood(theta: f64, data: &Dataset, x0: i64) -> f64 {
    interval_log_probs(theta, data, x0).into_iter().sum()
}

/// The exact death-model likelihood packaged as a (deterministic) estimator.
#[derive(Clone, Debug)]
pub struct DirectDeathEstimator {
    pub x0: i64,
}

impl DirectDeathEstimator {
    pub fn new(x0: i64) -> Self {
        Self { x0 }
    }
}

impl LikelihoodEstimator for DirectDeathEstimator {
    fn estimate(&self, theta: &[f64], data: &Dataset, _rng: &mut RngStream) -> Result<LikelihoodEstimate> {
        if theta.len() != 1 || data.obs_matrix().d_y() != 1 || !data.is_complete() {
            return Err(Error::InvalidConfig(
                "the direct estimator needs a scalar rate and complete scalar observations".into(),
            ));
        }
        let records = interval_log_probs(theta[0], data, self.x0)
            .into_iter()
            .map(|lp| IntervalRecord {
                log_p_hat: lp,
                m: 0,
                k: StopKind::Initial,
                visited: true,
            })
            .collect();
        Ok(LikelihoodEstimate::from_intervals(records, data.len(), 0))
    }

    fn label(&self) -> String {
        "Direct".into()
    }
}
