//! Sampling and log-mass helpers shared by the simulators, filters and oracles.

use rand_distr::{Distribution, Poisson};
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::rng::RngStream;

/// Poisson draw; a zero (or non-positive) rate yields 0.
#[inline]
pub fn poisson(rng: &mut RngStream, lambda: f64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    if lambda < 30.0 {
        // Inversion by sequential search; cheaper than constructing a sampler
        // for the small rates a tau-leap step usually sees.
        let u = rng.uniform();
        let mut k = 0u64;
        let mut p = (-lambda).exp();
        let mut cdf = p;
        while u >= cdf {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            if p < 1e-300 && cdf > 1.0 - 1e-15 {
                break;
            }
        }
        return k;
    }
    Poisson::new(lambda).expect("positive finite rate").sample(rng) as u64
}

/// `log Po(k; λ)` with the convention `Po(0; 0) = 1`.
#[inline]
pub fn ln_poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * lambda.ln() - lambda - ln_factorial(k)
}

/// `log Bin(k; n, p)`.
pub fn ln_binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// Exponential draw with the given rate.
#[inline]
pub fn exponential(rng: &mut RngStream, rate: f64) -> f64 {
    -rng.uniform_open0().ln() / rate
}

/// Standard normal draw.
#[inline]
pub fn std_normal(rng: &mut RngStream) -> f64 {
    rand_distr::StandardNormal.sample(rng)
}

/// `log(Σ exp(v))`, `-inf` for an empty or all-zero input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Running `log Σ exp` with a moving maximum shift.
#[derive(Clone, Copy, Debug)]
pub struct LogSumAcc {
    max: f64,
    scaled: f64,
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumAcc {
    #[inline]
    pub fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.scaled += (v - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}
