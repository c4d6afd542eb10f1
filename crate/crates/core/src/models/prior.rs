use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::rng::RngStream;

/// Independent prior component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum Marginal {
    /// Shape–rate parameterisation.
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Marginal {
    pub fn ln_density(&self, x: f64) -> f64 {
        match *self {
            Marginal::Gamma { shape, rate } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Marginal::Beta { a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p()
            }
            Marginal::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    f64::NEG_INFINITY
                } else {
                    -(hi - lo).ln()
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        use rand_distr::Distribution;
        match *self {
            Marginal::Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate).expect("valid gamma").sample(rng),
            Marginal::Beta { a, b } => rand_distr::Beta::new(a, b).expect("valid beta").sample(rng),
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
        }
    }
}

/// Product prior over the parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub marginals: Vec<Marginal>,
}

impl Prior {
    pub fn new(marginals: Vec<Marginal>) -> Self {
        Self { marginals }
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn ln_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.marginals.len() {
            return f64::NEG_INFINITY;
        }
        self.marginals.iter().zip(theta).map(|(m, &x)| m.ln_density(x)).sum()
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_density_matches_closed_form() {
        // Gamma(10, 1000) at its mean 0.01.
        let g = Marginal::Gamma { shape: 10.0, rate: 1000.0 };
        let direct = 1000f64.powi(10) / 362_880.0 * 0.01f64.powi(9) * (-10.0f64).exp();
        assert!((g.ln_density(0.01) - direct.ln()).abs() < 1e-10);
        assert_eq!(g.ln_density(-1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn beta_and_uniform_support() {
        let b = Marginal::Beta { a: 2.0, b: 5.0 };
        assert_eq!(b.ln_density(1.2), f64::NEG_INFINITY);
        // Beta(2,5) density at 0.5 is 30 * 0.5 * 0.5^4.
        assert!((b.ln_density(0.5) - (30.0 * 0.5f64.powi(5)).ln()).abs() < 1e-12);
        let u = Marginal::Uniform { lo: 0.0, hi: 1.0 };
        assert_eq!(u.ln_density(0.3), 0.0);
    }

    #[test]
    fn prior_dimension_mismatch_is_impossible() {
        let p = Prior::new(vec![Marginal::Uniform { lo: 0.0, hi: 1.0 }]);
        assert_eq!(p.ln_density(&[0.5, 0.5]), f64::NEG_INFINITY);
    }
}
