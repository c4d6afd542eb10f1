//! Choosing the success target `s` and the simulation cap `m_plus`.

mod partial;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use partial::{pilot_interval_probabilities, solve_s_partial_obs, vrel_partial_estimate, PartialVrelOptions};

/// Rounding applied to `2 + T / ln(1 + V)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    #[default]
    Ceiling,
    Nearest,
}

/// Slack absorbing floating-point error before taking a ceiling.
const CEIL_SLACK: f64 = 1e-9;

fn ceil_tolerant(x: f64) -> u64 {
    (x - CEIL_SLACK * x.abs().max(1.0)).ceil() as u64
}

/// Success target for `T` exact observations and relative variance `v_rel`.
pub fn success_target(big_t: u64, v_rel: f64, rounding: Rounding) -> u64 {
    assert!(big_t >= 1 && v_rel > 0.0, "need T >= 1 and v_rel > 0");
    let x = 2.0 + big_t as f64 / v_rel.ln_1p();
    match rounding {
        Rounding::Ceiling => ceil_tolerant(x),
        Rounding::Nearest => x.round() as u64,
    }
}

/// `E[P̂²]/p²` for the alive estimator `(s-1)/(M-1)` of a Bernoulli(p) success probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SecondMoment {
    Exact(f64),
    ExactWithBounds { value: f64, lower: f64, upper: f64 },
    Bounds { lower: f64, upper: f64 },
}

impl SecondMoment {
    /// The exact value when known, else the upper bound.
    pub fn conservative(&self) -> f64 {
        match *self {
            SecondMoment::Exact(v) | SecondMoment::ExactWithBounds { value: v, .. } => v,
            SecondMoment::Bounds { upper, .. } => upper,
        }
    }
}

pub fn relative_second_moment(s_target: u64, p: f64) -> SecondMoment {
    assert!(s_target >= 2 && p > 0.0 && p <= 1.0, "need s >= 2 and p in (0, 1]");
    if p == 1.0 {
        return SecondMoment::Exact(1.0);
    }
    let q = 1.0 - p;
    match s_target {
        2 => SecondMoment::Exact(-p.ln() / q),
        3 => SecondMoment::ExactWithBounds {
            value: 2.0 / q + 2.0 * p * p.ln() / (q * q),
            lower: 1.0 + q / 3.0,
            upper: 2.0 - p,
        },
        s => {
            let s = s as f64;
            SecondMoment::Bounds {
                lower: 1.0 + (1.0 - (1.0 + 2.0 / (s - 3.0)) * p) / (s - 2.0),
                upper: 1.0 + q / (s - 2.0),
            }
        }
    }
}

/// Approximate relative variance `exp(T/(s-2)) - 1` of the product estimator.
pub fn vrel_exact_obs(s_target: u64, big_t: u64) -> f64 {
    assert!(s_target >= 3, "s_target must be at least 3");
    (big_t as f64 / (s_target as f64 - 2.0)).exp_m1()
}

/// `⌈κ s / p_min⌉`.
pub fn mplus_rule(s_target: u64, p_min: f64, kappa: f64) -> Result<u64> {
    if !(p_min > 0.0 && p_min <= 1.0) || !(kappa > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "m_plus rule needs p_min in (0, 1] and kappa > 0 (got {p_min}, {kappa})"
        )));
    }
    Ok(ceil_tolerant(kappa * s_target as f64 / p_min))
}

/// Source of `P(Σ_{j ≤ m_plus} W^j < s)` in the capped second-moment bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailProbability {
    Supplied(f64),
    /// `exp{-3(κ - 7/4) s / (8 w_*)}` with `κ = m_plus p / s`; needs `κ ≥ 7/4`.
    Bernstein,
}

/// Bernstein tail bound for `κ = m_plus p / s ≥ 7/4`.
pub fn bernstein_tail_bound(kappa: f64, s_target: f64, w_star: f64) -> Result<f64> {
    if kappa < 1.75 {
        return Err(Error::InvalidConfig(format!(
            "Bernstein bound inapplicable: kappa = {kappa} is below 7/4"
        )));
    }
    Ok((-3.0 * (kappa - 1.75) * s_target / (8.0 * w_star)).exp())
}

/// Upper bound on `E[P̂²]/p²` when weights lie in `[0, w_star]` and at most `m_plus` trials run.
pub fn capped_second_moment_bound(s_target: f64, p: f64, w_star: f64, m_plus: u64, tail: TailProbability) -> Result<f64> {
    if !(s_target > 2.0 * w_star) || !(w_star > 0.0) || !(p > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "bound needs s ({s_target}) > 2 w_* ({w_star}) and p > 0"
        )));
    }
    let kappa = m_plus as f64 * p / s_target;
    let prob = match tail {
        TailProbability::Supplied(v) => v,
        TailProbability::Bernstein => bernstein_tail_bound(kappa, s_target, w_star)?,
    };
    Ok(1.0 + w_star / (s_target - 2.0 * w_star) + prob / kappa)
}

/// Smallest integer `s` in `[s_lo, s_hi]` with `evaluator(s) ≤ v_target`, by bisection.
///
/// Fails with [`Error::NoBracket`] unless `evaluator(s_lo) > v_target ≥ evaluator(s_hi)`.
pub fn solve_s_for_vrel<F>(mut evaluator: F, v_target: f64, s_lo: u64, s_hi: u64) -> Result<u64>
where
    F: FnMut(u64) -> Result<f64>,
{
    if s_lo >= s_hi {
        return Err(Error::InvalidConfig(format!("empty range [{s_lo}, {s_hi}]")));
    }
    let at_lo = evaluator(s_lo)?;
    let at_hi = evaluator(s_hi)?;
    if !(at_lo > v_target && at_hi <= v_target) {
        return Err(Error::NoBracket {
            lo: s_lo as f64,
            hi: s_hi as f64,
            at_lo,
            at_hi,
            target: v_target,
        });
    }
    // Invariant: f(lo) > target >= f(hi).
    let (mut lo, mut hi) = (s_lo, s_hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if evaluator(mid)? <= v_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Averages `replicates` calls of a noisy evaluator; the second argument is the replicate index.
pub fn smoothed<F>(mut noisy: F, replicates: u32) -> impl FnMut(u64) -> Result<f64>
where
    F: FnMut(u64, u32) -> Result<f64>,
{
    move |s| {
        let mut acc = 0.0;
        for r in 0..replicates {
            acc += noisy(s, r)?;
        }
        Ok(acc / replicates as f64)
    }
}

/// Default number of replicates averaged per bisection evaluation.
pub const SMOOTHING_REPLICATES: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuningMethod {
    ExactObs,
    PartialObs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub s_recommended: u64,
    pub m_plus_recommended: u64,
    pub v_rel_target: f64,
    pub kappa: f64,
    pub per_interval_p_estimates: Option<Vec<f64>>,
    pub method: TuningMethod,
}

/// Smallest admissible recommendation; `s = 2` cannot bound the relative variance as `p → 0`.
pub const MIN_RECOMMENDED_S: u64 = 3;

impl TuningReport {
    /// Report for complete exact observations from pilot per-interval probabilities.
    pub fn exact_obs(p_estimates: Vec<f64>, v_rel: f64, kappa: f64, rounding: Rounding) -> Result<Self> {
        let big_t = p_estimates.len() as u64;
        let s = success_target(big_t, v_rel, rounding).max(MIN_RECOMMENDED_S);
        Self::from_s(s, p_estimates, v_rel, kappa, TuningMethod::ExactObs)
    }

    /// Report with an externally chosen `s`.
    pub fn from_s(s: u64, p_estimates: Vec<f64>, v_rel: f64, kappa: f64, method: TuningMethod) -> Result<Self> {
        let s = s.max(MIN_RECOMMENDED_S);
        let p_min = p_estimates.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            s_recommended: s,
            m_plus_recommended: mplus_rule(s, p_min, kappa)?,
            v_rel_target: v_rel,
            kappa,
            per_interval_p_estimates: Some(p_estimates),
            method,
        })
    }
}
