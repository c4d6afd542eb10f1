//! Brute-force reference computations used to verify the estimators.

mod convolution;
mod enumerate;
mod suite;

pub use convolution::{tau_leap_exact_convolution, Convolution, STATE_CAP};
pub use enumerate::{enumerate_bernoulli, enumerate_bernoulli_estimator, Algorithm, Enumeration, Leaf};
pub use suite::{run_verify, CheckResult, EnumerationCase, VerifyGrid, VerifyReport};

use crate::rng::RngStream;

/// Trial index `M` of the `s_target`-th success in i.i.d. Bernoulli(p) draws.
pub fn negbin_trials_sample(p: f64, s_target: u64, rng: &mut RngStream) -> u64 {
    assert!(p > 0.0 && p <= 1.0, "p must lie in (0, 1]");
    if p == 1.0 {
        return s_target;
    }
    let log_q = (-p).ln_1p();
    (0..s_target)
        .map(|_| {
            // Geometric on {1, 2, ...} by inversion.
            let g = (rng.uniform_open0().ln() / log_q).ceil();
            (g as u64).max(1)
        })
        .sum()
}

/// `E[p̂]` of the hard-threshold alive filter on Bernoulli(p) trials:
/// `p · P(Bin(m_plus - 2, p) ≥ s_target - 1)`.
pub fn hard_threshold_expectation(p: f64, s_target: u64, m_plus: u64) -> f64 {
    use statrs::distribution::{Binomial, DiscreteCDF};
    assert!(s_target >= 2 && m_plus >= 2 && (0.0..=1.0).contains(&p), "need s >= 2, m_plus >= 2, p in [0, 1]");
    let reach = 1.0 - Binomial::new(p, m_plus - 2).expect("valid binomial").cdf(s_target - 2);
    p * reach
}
