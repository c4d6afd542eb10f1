use super::ReactionNetwork;
use crate::dist::poisson;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// End state of a tau-leap path and its per-step reaction counts.
#[derive(Clone, Debug, PartialEq)]
pub struct TauLeapPath {
    pub end_state: Vec<i64>,
    /// Row-major `N × r`: entry `[k * r + i]` is `Δn_i` in step `k`.
    pub event_counts: Vec<u64>,
}

/// Number of tau-leap steps covering `dt`; rejects non-integer ratios.
pub fn steps_for(dt: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0) || !(dt > 0.0) {
        return Err(Error::NonIntegerSteps { dt, tau });
    }
    let n = (dt / tau).round();
    if n < 1.0 || (n * tau - dt).abs() > 1e-9 * dt.max(1.0) {
        return Err(Error::NonIntegerSteps { dt, tau });
    }
    Ok(n as usize)
}

pub fn tau_leap_simulate(
    net: &ReactionNetwork,
    x0: &[i64],
    theta: &[f64],
    t0: f64,
    t1: f64,
    tau: f64,
    rng: &mut RngStream,
) -> Result<TauLeapPath> {
    let n = steps_for(t1 - t0, tau)?;
    let mut x = x0.to_vec();
    let mut h = vec![0.0; net.num_reactions()];
    let mut counts = Vec::with_capacity(n * net.num_reactions());
    tau_leap_advance(net, &mut x, theta, n, tau, rng, &mut h, Some(&mut counts));
    Ok(TauLeapPath {
        end_state: x,
        event_counts: counts,
    })
}

/// `n_steps` leaps of length `tau`, hazards frozen within each step.
#[allow(clippy::too_many_arguments)]
pub(crate) fn tau_leap_advance(
    net: &ReactionNetwork,
    x: &mut [i64],
    theta: &[f64],
    n_steps: usize,
    tau: f64,
    rng: &mut RngStream,
    h: &mut [f64],
    mut record: Option<&mut Vec<u64>>,
) {
    for _ in 0..n_steps {
        net.hazards_into(x, theta, h);
        for (i, &hi) in h.iter().enumerate() {
            let dn = poisson(rng, hi * tau);
            if dn > 0 {
                net.fire(x, i, dn as i64);
            }
            if let Some(rec) = record.as_deref_mut() {
                rec.push(dn);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelName};

    #[test]
    fn steps_must_divide() {
        assert_eq!(steps_for(1.0, 0.1).unwrap(), 10);
        assert_eq!(steps_for(0.5, 0.1).unwrap(), 5);
        assert!(steps_for(1.0, 0.3).is_err());
        assert!(steps_for(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_hazards_no_events() {
        let net = ReactionNetwork::new(vec![vec![1], vec![-1]], 0, |_, _, h| h.fill(0.0));
        let mut rng = RngStream::new(0);
        let path = tau_leap_simulate(&net, &[3], &[], 0.0, 1.0, 0.25, &mut rng).unwrap();
        assert_eq!(path.end_state, vec![3]);
        assert_eq!(path.event_counts, vec![0; 8]);
    }

    #[test]
    fn single_death_step_mean() {
        let model = build_model(ModelName::Death).unwrap();
        let mut rng = RngStream::new(8);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                tau_leap_simulate(&model.network, &[100], &[0.01], 0.0, 1.0, 1.0, &mut rng).unwrap().end_state[0] as f64
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        // Var = Poisson mean 1.
        let se = (1.0 / n as f64).sqrt();
        assert!((mean - 99.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn dimerisation_conserved_on_every_path() {
        let model = build_model(ModelName::Dimer).unwrap();
        let mut rng = RngStream::new(2);
        for _ in 0..2000 {
            let path = tau_leap_simulate(&model.network, &[20, 1], &[0.00332, 0.2], 0.0, 1.0, 0.1, &mut rng).unwrap();
            assert_eq!(path.end_state[0] + 2 * path.end_state[1], 22);
            assert_eq!(path.event_counts.len(), 20);
        }
    }
}
