//! Conditioned-hazard bridge proposals for tau-leap dynamics.
//!
//! Each sub-step draws reaction counts from Poisson rates pulled towards the
//! next observation; the importance weight is the ratio of tau-leap to
//! proposal Poisson masses times the endpoint indicator `1(Fᵀx = y)`.

use super::linalg::solve_in_place;
use super::tau_leap::steps_for;
use super::ReactionNetwork;
use crate::dataset::ObsMatrix;
use crate::dist::poisson;
use crate::error::Result;
use crate::rng::RngStream;

/// Conditioned rates never fall below this fraction of the unconditioned hazard,
/// so every path the tau-leap law can produce keeps positive proposal mass.
pub const CONDITIONED_HAZARD_FLOOR: f64 = 0.01;

/// Conditioned rates plus whether the unconditioned fallback was used.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedHazard {
    pub rates: Vec<f64>,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeResult {
    pub end_state: Vec<i64>,
    /// `-inf` iff the endpoint misses the observation (or a zero-rate reaction fired).
    pub log_weight: f64,
    /// Row-major `N × r` reaction counts.
    pub event_counts: Vec<u64>,
    /// Sub-steps where the inner matrix was singular.
    pub fallback_steps: usize,
}

/// Reusable buffers for repeated bridge simulations over one network and `F`.
#[derive(Clone, Debug)]
pub(crate) struct BridgeScratch {
    g: Vec<f64>, // Fᵀ S, row-major d_y × r
    h: Vec<f64>,
    hc: Vec<f64>,
    a: Vec<f64>,
    z: Vec<f64>,
}

impl BridgeScratch {
    pub(crate) fn new(net: &ReactionNetwork, obs: &ObsMatrix) -> Self {
        let (r, d_y) = (net.num_reactions(), obs.d_y());
        Self {
            g: net.projected_stoich(obs),
            h: vec![0.0; r],
            hc: vec![0.0; r],
            a: vec![0.0; d_y * d_y],
            z: vec![0.0; d_y],
        }
    }

    /// Fills `self.h` and `self.hc` for state `x`; returns true on fallback.
    fn condition(&mut self, net: &ReactionNetwork, obs: &ObsMatrix, x: &[i64], theta: &[f64], y: &[i64], remaining: f64) -> bool {
        let r = net.num_reactions();
        let d_y = obs.d_y();
        net.hazards_into(x, theta, &mut self.h);
        for c in 0..d_y {
            let fx: i64 = (0..obs.d_x()).map(|s| obs.get(s, c) * x[s]).sum();
            let drift: f64 = (0..r).map(|i| self.g[c * r + i] * self.h[i]).sum();
            self.z[c] = (y[c] - fx) as f64 - drift * remaining;
            for c2 in 0..d_y {
                self.a[c * d_y + c2] =
                    remaining * (0..r).map(|i| self.g[c * r + i] * self.h[i] * self.g[c2 * r + i]).sum::<f64>();
            }
        }
        if solve_in_place(&mut self.a, &mut self.z, d_y).is_err() {
            self.hc.copy_from_slice(&self.h);
            return true;
        }
        for i in 0..r {
            let corr: f64 = (0..d_y).map(|c| self.g[c * r + i] * self.z[c]).sum();
            let v = self.h[i] + self.h[i] * corr;
            self.hc[i] = v.max(CONDITIONED_HAZARD_FLOOR * self.h[i]);
        }
        false
    }
}

/// Moment-matched hazard at `x_s` pulled towards `y_t` over the remaining time.
pub fn conditioned_hazard(
    net: &ReactionNetwork,
    x_s: &[i64],
    theta: &[f64],
    y_t: &[i64],
    obs: &ObsMatrix,
    dt_remaining: f64,
) -> ConditionedHazard {
    let mut scratch = BridgeScratch::new(net, obs);
    let fallback = scratch.condition(net, obs, x_s, theta, y_t, dt_remaining);
    ConditionedHazard {
        rates: scratch.hc,
        fallback,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn bridge_simulate(
    net: &ReactionNetwork,
    x_prev: &[i64],
    theta: &[f64],
    y_t: &[i64],
    obs: &ObsMatrix,
    dt: f64,
    tau: f64,
    rng: &mut RngStream,
) -> Result<BridgeResult> {
    let n = steps_for(dt, tau)?;
    let mut scratch = BridgeScratch::new(net, obs);
    let mut x = x_prev.to_vec();
    let mut counts = Vec::with_capacity(n * net.num_reactions());
    let (log_weight, fallback_steps) =
        bridge_advance(net, &mut scratch, obs, &mut x, theta, y_t, n, tau, rng, Some(&mut counts));
    Ok(BridgeResult {
        end_state: x,
        log_weight,
        event_counts: counts,
        fallback_steps,
    })
}

/// Runs one bridge in place; returns `(log_weight, fallback_steps)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bridge_advance(
    net: &ReactionNetwork,
    scratch: &mut BridgeScratch,
    obs: &ObsMatrix,
    x: &mut [i64],
    theta: &[f64],
    y: &[i64],
    n_steps: usize,
    tau: f64,
    rng: &mut RngStream,
    mut record: Option<&mut Vec<u64>>,
) -> (f64, usize) {
    let mut log_w = 0.0;
    let mut fallbacks = 0;
    for k in 0..n_steps {
        let remaining = (n_steps - k) as f64 * tau;
        if scratch.condition(net, obs, x, theta, y, remaining) {
            fallbacks += 1;
        }
        for i in 0..net.num_reactions() {
            let (h, hc) = (scratch.h[i] * tau, scratch.hc[i] * tau);
            let dn = poisson(rng, hc);
            // log Po(dn; h) - log Po(dn; hc); the factorials cancel.
            log_w += if hc == 0.0 {
                -h
            } else if h == 0.0 {
                if dn > 0 {
                    f64::NEG_INFINITY
                } else {
                    hc
                }
            } else {
                dn as f64 * (h / hc).ln() - (h - hc)
            };
            if dn > 0 {
                net.fire(x, i, dn as i64);
            }
            if let Some(rec) = record.as_deref_mut() {
                rec.push(dn);
            }
        }
    }
    if !obs.matches(x, y) {
        log_w = f64::NEG_INFINITY;
    }
    (log_w, fallbacks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelName};

    #[test]
    fn zero_residual_leaves_hazard_unchanged() {
        let model = build_model(ModelName::Death).unwrap();
        // h = 1, S h dt = -1: residual vanishes for y = 99.
        let ch = conditioned_hazard(&model.network, &[100], &[0.01], &[99], &ObsMatrix::identity(1), 1.0);
        assert!(!ch.fallback);
        assert!((ch.rates[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_hazards_fall_back() {
        let model = build_model(ModelName::Lv).unwrap();
        let ch = conditioned_hazard(&model.network, &[0, 0], &[0.5, 0.0025, 0.3], &[5, 5], &ObsMatrix::identity(2), 1.0);
        assert!(ch.fallback);
        assert_eq!(ch.rates, vec![0.0; 3]);
    }

    #[test]
    fn lv_matches_closed_form_solve() {
        // Independent route: 2×2 inverse by the adjugate.
        let model = build_model(ModelName::Lv).unwrap();
        let theta = [0.5, 0.0025, 0.3];
        let x = [50i64, 50];
        let h: [f64; 3] = [25.0, 6.25, 15.0];
        let s = [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]];
        let drift: [f64; 2] = [h[0] - h[1], h[1] - h[2]];
        let y = [(50.0 + drift[0]).round() as i64, (50.0 + drift[1]).round() as i64];
        let dt = 1.0;
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] = (0..3).map(|i| s[a][i] * h[i] * s[b][i]).sum::<f64>() * dt;
            }
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        let z = [y[0] as f64 - 50.0 - drift[0] * dt, y[1] as f64 - 50.0 - drift[1] * dt];
        let u = [inv[0][0] * z[0] + inv[0][1] * z[1], inv[1][0] * z[0] + inv[1][1] * z[1]];
        let expected: Vec<f64> =
            (0..3).map(|i| (h[i] + h[i] * (s[0][i] * u[0] + s[1][i] * u[1])).max(CONDITIONED_HAZARD_FLOOR * h[i])).collect();

        let got = conditioned_hazard(&model.network, &x, &theta, &y, &ObsMatrix::identity(2), dt);
        for (g, e) in got.rates.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-9 * e.abs().max(1e-300), "{g} vs {e}");
        }
    }

    #[test]
    fn unconditioned_bridge_has_unit_weight() {
        // A network whose observed component is never touched: the residual
        // is identically zero and the proposal equals the tau-leap law.
        let net = ReactionNetwork::new(vec![vec![0, 1]], 1, |_, th, h| h[0] = th[0]);
        let obs = ObsMatrix::select(2, &[0]);
        let mut rng = RngStream::new(4);
        for _ in 0..100 {
            let b = bridge_simulate(&net, &[3, 0], &[2.0], &[3], &obs, 1.0, 0.25, &mut rng).unwrap();
            assert_eq!(b.log_weight, 0.0);
        }
    }

    #[test]
    fn endpoint_mismatch_is_zero_weight() {
        let model = build_model(ModelName::Death).unwrap();
        let mut rng = RngStream::new(4);
        // Reaching 150 from 100 by deaths is impossible.
        let b = bridge_simulate(&model.network, &[100], &[0.01], &[150], &ObsMatrix::identity(1), 1.0, 0.5, &mut rng).unwrap();
        assert_eq!(b.log_weight, f64::NEG_INFINITY);
    }
}
