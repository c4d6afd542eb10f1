//! Multi-interval filters sharing one particle engine.

use super::trial::TrialModel;
use crate::config::{FilterConfig, SuccessMeasure, UNBOUNDED};
use crate::error::{Error, Result};
use crate::estimate::{IntervalRecord, LikelihoodEstimate, StopKind};
use crate::rng::RngStream;

/// Default cap on total simulations for the unbounded alive filter.
pub const DEFAULT_ABORT_GUARD: u64 = 1_000_000_000;

/// Particles of one interval. `states`, `log_weights` and `successes` all hold `m` entries.
#[derive(Clone, Debug, Default)]
pub struct ParticleBuffer {
    pub state_dim: usize,
    pub states: Vec<i64>,
    pub log_weights: Vec<f64>,
    pub successes: Vec<f64>,
    pub m: usize,
    pub k: Option<StopKind>,
}

impl ParticleBuffer {
    fn reset(&mut self, state_dim: usize) {
        self.state_dim = state_dim;
        self.states.clear();
        self.log_weights.clear();
        self.successes.clear();
        self.m = 0;
        self.k = None;
    }

    pub fn state(&self, j: usize) -> &[i64] {
        &self.states[j * self.state_dim..(j + 1) * self.state_dim]
    }

    /// Number of leading particles that feed the estimate and the next resampling step.
    pub fn usable(&self) -> usize {
        match self.k {
            Some(StopKind::Crossed) => self.m - 1,
            _ => self.m,
        }
    }
}

/// Called once per completed interval with its zero-based index.
pub type IntervalObserver<'a> = dyn FnMut(usize, &ParticleBuffer) + 'a;

#[derive(Clone, Copy, Debug, PartialEq)]
enum StopRule {
    Franken,
    HardThreshold,
    Alive { guard: u64 },
}

struct Ancestry {
    cum: Vec<f64>,
}

impl Ancestry {
    /// Cumulative shifted weights over the usable particles; `None` when they sum to zero.
    fn build(&mut self, buf: &ParticleBuffer) -> bool {
        let n = buf.usable();
        let lw = &buf.log_weights[..n];
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.cum.clear();
        if max == f64::NEG_INFINITY {
            return false;
        }
        let mut acc = 0.0;
        for &v in lw {
            acc += (v - max).exp();
            self.cum.push(acc);
        }
        true
    }

    fn sample(&self, rng: &mut RngStream) -> usize {
        let total = *self.cum.last().expect("nonempty ancestry");
        let u = rng.uniform() * total;
        let j = self.cum.partition_point(|&c| c <= u);
        // Rounding can push `u` onto the final boundary; zero-weight tails are skipped.
        let j = j.min(self.cum.len() - 1);
        if j > 0 && self.cum[j] == self.cum[j - 1] {
            self.cum.partition_point(|&c| c < self.cum[j])
        } else {
            j
        }
    }
}

/// `log((1/n) Σ exp(lw))`, `-inf` when every weight is zero or `n = 0`.
fn log_mean_exp(lw: &[f64]) -> f64 {
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = lw.iter().map(|&v| (v - max).exp()).sum();
    max + s.ln() - (lw.len() as f64).ln()
}

#[allow(clippy::too_many_arguments)]
fn run<M: TrialModel + ?Sized>(
    model: &mut M,
    threshold: &dyn Fn(usize) -> f64,
    m_minus: usize,
    m_plus: usize,
    success: SuccessMeasure,
    rule: StopRule,
    rng: &mut RngStream,
    mut observer: Option<&mut IntervalObserver<'_>>,
) -> Result<LikelihoodEstimate> {
    let d = model.state_dim();
    let big_t = model.num_intervals();
    let mut prev = ParticleBuffer::default();
    let mut cur = ParticleBuffer::default();
    let mut ancestry = Ancestry { cum: Vec::new() };
    let mut start = vec![0i64; d];
    let mut end = vec![0i64; d];
    let mut records = Vec::with_capacity(big_t);
    let mut total: u64 = 0;

    for t in 0..big_t {
        cur.reset(d);
        let target = threshold(t);
        let mut sum_s = 0.0;
        let mut draw = |cur: &mut ParticleBuffer, rng: &mut RngStream| {
            if t == 0 {
                model.sample_initial(&mut start, rng);
            } else {
                let a = ancestry.sample(rng);
                start.copy_from_slice(prev.state(a));
            }
            let trial = model.propagate(t, &start, &mut end, rng);
            let s = success.increment(trial.log_weight, trial.success);
            cur.states.extend_from_slice(&end);
            cur.log_weights.push(trial.log_weight);
            cur.successes.push(s);
            cur.m += 1;
            s
        };
        while cur.m < m_minus {
            sum_s += draw(&mut cur, rng);
        }
        while cur.m < m_plus && sum_s < target {
            if let StopRule::Alive { guard } = rule {
                if total + cur.m as u64 >= guard {
                    return Err(Error::AbortGuard {
                        simulations: total + cur.m as u64,
                    });
                }
            }
            sum_s += draw(&mut cur, rng);
        }
        total += cur.m as u64;

        let (k, log_p) = match rule {
            StopRule::Franken | StopRule::Alive { .. } => {
                let k = if cur.m == m_minus {
                    StopKind::Initial
                } else if sum_s < target {
                    StopKind::Exhausted
                } else {
                    StopKind::Crossed
                };
                cur.k = Some(k);
                (k, log_mean_exp(&cur.log_weights[..cur.usable()]))
            }
            StopRule::HardThreshold => {
                if cur.m == m_plus {
                    cur.k = Some(StopKind::Exhausted);
                    (StopKind::Exhausted, f64::NEG_INFINITY)
                } else {
                    cur.k = Some(StopKind::Crossed);
                    (StopKind::Crossed, log_mean_exp(&cur.log_weights[..cur.m - 1]))
                }
            }
        };
        if let Some(obs) = observer.as_deref_mut() {
            obs(t, &cur);
        }
        records.push(IntervalRecord {
            log_p_hat: log_p,
            m: cur.m,
            k,
            visited: true,
        });
        if log_p == f64::NEG_INFINITY {
            break;
        }
        if t + 1 < big_t && !ancestry.build(&cur) {
            break;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(LikelihoodEstimate::from_intervals(records, big_t, total))
}

/// General Frankenfilter over all intervals of `model`.
pub fn frankenfilter_general<M: TrialModel + ?Sized>(
    model: &mut M,
    config: &FilterConfig,
    rng: &mut RngStream,
) -> Result<LikelihoodEstimate> {
    frankenfilter_observed(model, config, rng, None)
}

/// [`frankenfilter_general`] with a per-interval callback on the finished particle set.
pub fn frankenfilter_observed<M: TrialModel + ?Sized>(
    model: &mut M,
    config: &FilterConfig,
    rng: &mut RngStream,
    observer: Option<&mut IntervalObserver<'_>>,
) -> Result<LikelihoodEstimate> {
    config.validate()?;
    run(
        model,
        &|t| config.threshold(t),
        config.m_minus(),
        config.m_plus(),
        config.success(),
        StopRule::Franken,
        rng,
        observer,
    )
}

/// Alive filter with a hard threshold: any interval that reaches `m_plus`
/// trials reports zero, even if the target success arrives on the last trial.
/// This estimator is biased and is provided for comparison.
pub fn alive_hard_threshold<M: TrialModel + ?Sized>(
    model: &mut M,
    s_target: usize,
    m_plus: usize,
    rng: &mut RngStream,
) -> Result<LikelihoodEstimate> {
    if s_target < 2 || m_plus < s_target {
        return Err(Error::InvalidConfig(format!(
            "hard-threshold filter needs 2 <= s_target ({s_target}) <= m_plus ({m_plus})"
        )));
    }
    let s = s_target as f64;
    run(model, &|_| s, 0, m_plus, SuccessMeasure::IndicatorMatch, StopRule::HardThreshold, rng, None)
}

/// Alive filter without an upper bound. Exceeding `guard` total simulations is an error.
pub fn alive_filter<M: TrialModel + ?Sized>(
    model: &mut M,
    s_target: usize,
    guard: u64,
    rng: &mut RngStream,
) -> Result<LikelihoodEstimate> {
    if s_target < 2 {
        return Err(Error::InvalidConfig(format!("alive filter needs s_target >= 2, got {s_target}")));
    }
    let s = s_target as f64;
    run(model, &|_| s, 0, UNBOUNDED, SuccessMeasure::IndicatorMatch, StopRule::Alive { guard }, rng, None)
}

/// Bootstrap particle filter with `n_particles` particles and multinomial resampling.
pub fn bootstrap_pf<M: TrialModel + ?Sized>(
    model: &mut M,
    n_particles: usize,
    rng: &mut RngStream,
) -> Result<LikelihoodEstimate> {
    if n_particles == 0 {
        return Err(Error::InvalidConfig("bootstrap filter needs at least one particle".into()));
    }
    // A zero threshold stops every interval at the initial batch.
    run(
        model,
        &|_| 0.0,
        n_particles,
        n_particles + 1,
        SuccessMeasure::IndicatorMatch,
        StopRule::Franken,
        rng,
        None,
    )
}
