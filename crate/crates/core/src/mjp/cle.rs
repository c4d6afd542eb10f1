use nalgebra::{DMatrix, DVector};

use super::ReactionNetwork;
use crate::dataset::ObsMatrix;
use crate::error::{Error, Result};

/// Log of the chemical-Langevin Gaussian transition density
/// `N(y; Fᵀ(x + S h dt), Fᵀ S diag(h) Sᵀ F dt)`.
///
/// Fails with [`Error::CleUnavailable`] (interval 0; callers re-tag it) when
/// the covariance is not positive definite.
pub fn cle_log_density(
    net: &ReactionNetwork,
    x_prev: &[i64],
    theta: &[f64],
    y_t: &[i64],
    obs: &ObsMatrix,
    dt: f64,
) -> Result<f64> {
    let r = net.num_reactions();
    let d_y = obs.d_y();
    let h = net.hazards(x_prev, theta);
    let g = net.projected_stoich(obs);
    let fx = obs.project(x_prev);

    let resid = DVector::from_fn(d_y, |c, _| {
        let drift: f64 = (0..r).map(|i| g[c * r + i] * h[i]).sum();
        y_t[c] as f64 - (fx[c] as f64 + drift * dt)
    });
    let cov = DMatrix::from_fn(d_y, d_y, |a, b| dt * (0..r).map(|i| g[a * r + i] * h[i] * g[b * r + i]).sum::<f64>());
    let chol = cov.cholesky().ok_or(Error::CleUnavailable { interval: 0 })?;
    let l = chol.l();
    if l.diagonal().iter().any(|&v| !(v > 1e-12)) {
        return Err(Error::CleUnavailable { interval: 0 });
    }
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let sol = chol.solve(&resid);
    let quad = resid.dot(&sol);
    Ok(-0.5 * (d_y as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad))
}

pub fn cle_transition_density(
    net: &ReactionNetwork,
    x_prev: &[i64],
    theta: &[f64],
    y_t: &[i64],
    obs: &ObsMatrix,
    dt: f64,
) -> Result<f64> {
    cle_log_density(net, x_prev, theta, y_t, obs, dt).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ln_binomial_pmf;
    use crate::models::{build_model, ModelName};

    #[test]
    fn death_model_hand_value() {
        let m = build_model(ModelName::Death).unwrap();
        let v = cle_transition_density(&m.network, &[100], &[0.01], &[99], &ObsMatrix::identity(1), 1.0).unwrap();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singular_covariance_errors() {
        let m = build_model(ModelName::Lv).unwrap();
        let r = cle_transition_density(&m.network, &[0, 0], &[0.5, 0.0025, 0.3], &[0, 0], &ObsMatrix::identity(2), 1.0);
        assert!(matches!(r, Err(Error::CleUnavailable { .. })));
    }

    #[test]
    fn close_to_exact_binomial() {
        let m = build_model(ModelName::Death).unwrap();
        let cle = cle_transition_density(&m.network, &[100], &[0.01], &[99], &ObsMatrix::identity(1), 1.0).unwrap();
        let exact = ln_binomial_pmf(99, 100, (-0.01f64).exp()).exp();
        assert!((cle - exact).abs() / exact < 0.15, "cle {cle} exact {exact}");
    }
}
