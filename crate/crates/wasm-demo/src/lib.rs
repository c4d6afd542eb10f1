//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export returns a flat row-major `Float64Array`; the row layout is
//! given on each function.

use frankenfilter::filters::{alive_hard_threshold, frankenfilter_general, BernoulliTrials};
use frankenfilter::mjp::gillespie_simulate;
use frankenfilter::models::{build_model, ModelName};
use frankenfilter::oracle::hard_threshold_expectation;
use frankenfilter::tuning::{relative_second_moment, vrel_exact_obs, SecondMoment};
use frankenfilter::{FilterConfig, RngStream};
use wasm_bindgen::prelude::*;

/// Mean of `exp(v)` over `values`, computed stably.
fn mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    max.exp() * values.iter().map(|v| (v - max).exp()).sum::<f64>() / values.len() as f64
}

/// Rows `[m_plus, apf_exact, apf_monte_carlo, ff_monte_carlo]` of `E[P̂] / p^T`
/// for `T` intervals that each succeed with probability `p`.
pub fn bias_rows(p: f64, s: u32, intervals: u32, m_plus: &[u32], replicates: u32, seed: u64) -> Result<Vec<f64>, String> {
    if !(p > 0.0 && p <= 1.0) || s < 2 || intervals == 0 || replicates == 0 {
        return Err("need 0 < p <= 1, s >= 2, at least one interval and one replicate".into());
    }
    let log_pt = intervals as f64 * p.ln();
    let root = RngStream::new(seed);
    let mut rows = Vec::with_capacity(m_plus.len() * 4);
    for (i, &mp) in m_plus.iter().enumerate() {
        if mp < s {
            return Err(format!("m+ = {mp} is below s = {s}"));
        }
        let exact = (hard_threshold_expectation(p, s as u64, mp as u64) / p).powi(intervals as i32);
        let cfg = FilterConfig::indicator(s as f64, mp as usize).map_err(|e| e.to_string())?;
        let mut rng = root.derive(i as u32);
        let mut apf = Vec::with_capacity(replicates as usize);
        let mut ff = Vec::with_capacity(replicates as usize);
        for _ in 0..replicates {
            let mut trials = BernoulliTrials::new(p, intervals as usize);
            let a = alive_hard_threshold(&mut trials, s as usize, mp as usize, &mut rng).map_err(|e| e.to_string())?;
            apf.push(a.log_p_hat - log_pt);
            let f = frankenfilter_general(&mut trials, &cfg, &mut rng).map_err(|e| e.to_string())?;
            ff.push(f.log_p_hat - log_pt);
        }
        rows.extend([mp as f64, exact, mean_exp(&apf), mean_exp(&ff)]);
    }
    Ok(rows)
}

/// Rows `[s, exp(T/(s-2)) - 1, lower, upper]` for `s` in `s_lo..=s_hi`, where
/// `lower` and `upper` bound the relative variance of `T` independent alive
/// estimates of a probability `p`.
pub fn vrel_rows(intervals: u32, p: f64, s_lo: u32, s_hi: u32) -> Result<Vec<f64>, String> {
    if intervals == 0 || !(p > 0.0 && p <= 1.0) || s_lo < 3 || s_hi < s_lo {
        return Err("need T >= 1, 0 < p <= 1 and 3 <= s_lo <= s_hi".into());
    }
    let t = intervals as i32;
    let mut rows = Vec::with_capacity((s_hi - s_lo + 1) as usize * 4);
    for s in s_lo..=s_hi {
        let (lo, hi) = match relative_second_moment(s as u64, p) {
            SecondMoment::Exact(v) => (v, v),
            SecondMoment::ExactWithBounds { value, .. } => (value, value),
            SecondMoment::Bounds { lower, upper } => (lower, upper),
        };
        rows.extend([
            s as f64,
            vrel_exact_obs(s as u64, intervals as u64),
            lo.powi(t) - 1.0,
            hi.powi(t) - 1.0,
        ]);
    }
    Ok(rows)
}

/// Rows `[t, x_1, ..., x_d]` of an exact path sampled at `points + 1` equally spaced times.
pub fn trajectory_rows(model: &str, theta: &[f64], x0: &[f64], t_max: f64, points: u32, seed: u64) -> Result<Vec<f64>, String> {
    let name: ModelName = model.parse().map_err(|e: frankenfilter::Error| e.to_string())?;
    let m = build_model(name).map_err(|e| e.to_string())?;
    if theta.len() != m.theta_dim() || x0.len() != m.network.num_species() {
        return Err(format!(
            "model `{name}` takes {} parameters and {} species",
            m.theta_dim(),
            m.network.num_species()
        ));
    }
    if !(t_max > 0.0) || points == 0 || theta.iter().any(|v| !(*v >= 0.0)) || x0.iter().any(|v| !(*v >= 0.0)) {
        return Err("need t_max > 0, points >= 1 and nonnegative parameters and counts".into());
    }
    let mut x: Vec<i64> = x0.iter().map(|v| v.round() as i64).collect();
    let mut rng = RngStream::new(seed);
    let dt = t_max / points as f64;
    let mut rows = Vec::with_capacity((points as usize + 1) * (x.len() + 1));
    rows.push(0.0);
    rows.extend(x.iter().map(|&v| v as f64));
    for i in 1..=points {
        x = gillespie_simulate(&m.network, &x, theta, (i - 1) as f64 * dt, i as f64 * dt, &mut rng);
        rows.push(i as f64 * dt);
        rows.extend(x.iter().map(|&v| v as f64));
    }
    Ok(rows)
}

#[wasm_bindgen]
pub fn bias_curve(p: f64, s: u32, intervals: u32, m_plus: &[u32], replicates: u32, seed: u64) -> Result<Vec<f64>, JsError> {
    bias_rows(p, s, intervals, m_plus, replicates, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn vrel_curve(intervals: u32, p: f64, s_lo: u32, s_hi: u32) -> Result<Vec<f64>, JsError> {
    vrel_rows(intervals, p, s_lo, s_hi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn trajectory(model: &str, theta: &[f64], x0: &[f64], t_max: f64, points: u32, seed: u64) -> Result<Vec<f64>, JsError> {
    trajectory_rows(model, theta, x0, t_max, points, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_rows_show_hard_threshold_bias() {
        let rows = bias_rows(0.3, 5, 4, &[10, 40], 4000, 1).unwrap();
        assert_eq!(rows.len(), 8);
        let (apf_exact, ff_mc) = (rows[1], rows[3]);
        assert!(apf_exact < 0.5);
        assert!((ff_mc - 1.0).abs() < 0.1, "FF ratio {ff_mc}");
        assert!((rows[2] - apf_exact).abs() < 0.1, "APF Monte Carlo {} vs {apf_exact}", rows[2]);
        assert!(rows[5] > 0.99);
    }

    #[test]
    fn vrel_rows_are_ordered() {
        let rows = vrel_rows(50, 0.4, 3, 60).unwrap();
        for r in rows.chunks(4) {
            assert!(r[2] <= r[3] + 1e-12);
        }
        assert!((rows[rows.len() - 3] - ((50.0f64 / 58.0).exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn death_trajectory_never_increases() {
        let rows = trajectory_rows("death", &[0.05], &[100.0], 50.0, 100, 3).unwrap();
        let xs: Vec<f64> = rows.chunks(2).map(|r| r[1]).collect();
        assert_eq!(xs.len(), 101);
        assert!(xs.windows(2).all(|w| w[1] <= w[0]));
        assert!(trajectory_rows("death", &[0.05, 1.0], &[100.0], 1.0, 10, 3).is_err());
    }
}
