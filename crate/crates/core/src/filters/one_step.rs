//! Single-target estimators driven by a stream of i.i.d. trials.

use crate::config::FilterConfig;
use crate::error::{Error, Result};
use crate::estimate::StopKind;
use crate::rng::RngStream;

/// Estimate, number of trials and stop kind of a single-target run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneStepOutcome {
    pub estimate: f64,
    pub m: usize,
    pub k: StopKind,
}

/// Binary-weight Frankenfilter for a single probability.
///
/// Simulates while `m < m_plus` and fewer than `s_target` successes; the
/// returned estimate uses the `m - 1` denominator exactly when the success
/// target was met, including when it is met on trial `m_plus`.
pub fn frankenfilter_basic<F>(mut trial: F, s_target: usize, m_plus: usize, rng: &mut RngStream) -> OneStepOutcome
where
    F: FnMut(&mut RngStream) -> bool,
{
    assert!(s_target >= 2, "s_target must be at least 2");
    let (mut m, mut hits, mut last) = (0usize, 0usize, false);
    while m < m_plus && hits < s_target {
        last = trial(rng);
        hits += last as usize;
        m += 1;
    }
    if hits < s_target {
        OneStepOutcome {
            estimate: hits as f64 / m as f64,
            m,
            k: StopKind::Exhausted,
        }
    } else {
        OneStepOutcome {
            estimate: (hits - last as usize) as f64 / (m - 1) as f64,
            m,
            k: StopKind::Crossed,
        }
    }
}

/// One-step Frankenfilter with general weights `w` and success amounts `s`.
///
/// `trial` returns `(w, s)`; the success measure in `config` is not consulted.
pub fn frankenfilter_one_step<F>(mut trial: F, config: &FilterConfig, rng: &mut RngStream) -> OneStepOutcome
where
    F: FnMut(&mut RngStream) -> (f64, f64),
{
    let target = config.s_target();
    let (mut sum_w, mut sum_s, mut last_w) = (0.0, 0.0, 0.0);
    let mut m = 0;
    while m < config.m_minus() {
        let (w, s) = trial(rng);
        sum_w += w;
        sum_s += s;
        m += 1;
    }
    while m < config.m_plus() && sum_s < target {
        let (w, s) = trial(rng);
        sum_w += w;
        sum_s += s;
        last_w = w;
        m += 1;
    }
    if m == config.m_minus() {
        OneStepOutcome {
            estimate: sum_w / m as f64,
            m,
            k: StopKind::Initial,
        }
    } else if sum_s < target {
        OneStepOutcome {
            estimate: sum_w / m as f64,
            m,
            k: StopKind::Exhausted,
        }
    } else {
        OneStepOutcome {
            estimate: (sum_w - last_w) / (m - 1) as f64,
            m,
            k: StopKind::Crossed,
        }
    }
}

/// Zero-based ancestor index: proportional to `weights[..m-1]` when the
/// previous interval crossed its threshold, to `weights[..m]` otherwise.
pub fn ancestor_sample(m: usize, k: StopKind, weights: &[f64], rng: &mut RngStream) -> Result<usize> {
    let usable = if k == StopKind::Crossed { m - 1 } else { m };
    let w = &weights[..usable];
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let mut u = rng.uniform() * total;
    let mut last_positive = 0;
    for (i, &wi) in w.iter().enumerate() {
        if wi > 0.0 {
            if u < wi {
                return Ok(i);
            }
            last_positive = i;
        }
        u -= wi;
    }
    Ok(last_positive)
}
