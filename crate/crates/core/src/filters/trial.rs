use crate::dataset::{Dataset, ObsMatrix};
use crate::error::{Error, Result};
use crate::mjp::{bridge_advance, gillespie_advance, steps_for, tau_leap_advance, BridgeScratch, ReactionNetwork};
use crate::models::{InferentialKind, InitialState, StudyModel};
use crate::rng::RngStream;

/// Outcome of propagating one particle across an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trial {
    /// `log w`; `-inf` encodes a zero weight.
    pub log_weight: f64,
    /// Success amount reported by the model; only read under [`crate::SuccessMeasure::Custom`].
    pub success: f64,
}

impl Trial {
    pub fn indicator(hit: bool) -> Self {
        if hit {
            Trial {
                log_weight: 0.0,
                success: 1.0,
            }
        } else {
            Trial {
                log_weight: f64::NEG_INFINITY,
                success: 0.0,
            }
        }
    }
}

/// A state-space model seen as a sequence of importance trials.
///
/// States are flat `i64` buffers of length [`state_dim`](TrialModel::state_dim).
pub trait TrialModel {
    fn state_dim(&self) -> usize;
    fn num_intervals(&self) -> usize;
    fn sample_initial(&mut self, out: &mut [i64], rng: &mut RngStream);
    /// Propagates `from` across the zero-based interval `t` into `to`.
    fn propagate(&mut self, t: usize, from: &[i64], to: &mut [i64], rng: &mut RngStream) -> Trial;
}

/// I.i.d. Bernoulli(p) matches on every interval; the state is inert.
#[derive(Clone, Debug)]
pub struct BernoulliTrials {
    pub p: f64,
    pub intervals: usize,
}

impl BernoulliTrials {
    pub fn new(p: f64, intervals: usize) -> Self {
        Self { p, intervals }
    }
}

impl TrialModel for BernoulliTrials {
    fn state_dim(&self) -> usize {
        1
    }

    fn num_intervals(&self) -> usize {
        self.intervals
    }

    fn sample_initial(&mut self, out: &mut [i64], _rng: &mut RngStream) {
        out[0] = 0;
    }

    fn propagate(&mut self, _t: usize, from: &[i64], to: &mut [i64], rng: &mut RngStream) -> Trial {
        to[0] = from[0];
        Trial::indicator(rng.uniform() < self.p)
    }
}

/// How paths between observations are proposed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    /// Simulate the inferential dynamics and weight by the observation indicator.
    #[default]
    Forward,
    /// Conditioned-hazard tau-leap bridges with importance weights.
    Bridge,
}

enum Dynamics {
    Exact,
    TauLeap { tau: f64, steps: Vec<usize> },
    Bridge { tau: f64, steps: Vec<usize>, scratch: Box<BridgeScratch> },
}

/// A reaction network, parameter value and dataset bound together as trials.
pub struct MjpTrialModel<'a> {
    net: &'a ReactionNetwork,
    theta: &'a [f64],
    data: &'a Dataset,
    initial: &'a InitialState,
    obs: &'a ObsMatrix,
    dynamics: Dynamics,
    h: Vec<f64>,
}

impl<'a> MjpTrialModel<'a> {
    pub fn new(model: &'a StudyModel, theta: &'a [f64], data: &'a Dataset, proposal: Proposal) -> Result<Self> {
        let net = &model.network;
        if theta.len() != net.theta_dim() {
            return Err(Error::InvalidConfig(format!(
                "model `{}` takes {} parameters, got {}",
                model.name,
                net.theta_dim(),
                theta.len()
            )));
        }
        let obs = data.obs_matrix();
        if obs.d_x() != net.num_species() {
            return Err(Error::InvalidConfig(format!(
                "observation matrix has {} rows but the model has {} species",
                obs.d_x(),
                net.num_species()
            )));
        }
        let steps = |tau: f64| -> Result<Vec<usize>> {
            (0..data.len()).map(|t| steps_for(data.interval_length(t), tau)).collect()
        };
        let dynamics = match (model.inferential, proposal) {
            (InferentialKind::ExactMjp, Proposal::Forward) => Dynamics::Exact,
            (InferentialKind::ExactMjp, Proposal::Bridge) => return Err(Error::BridgeOnExactMjp),
            (InferentialKind::TauLeap { tau }, Proposal::Forward) => Dynamics::TauLeap { tau, steps: steps(tau)? },
            (InferentialKind::TauLeap { tau }, Proposal::Bridge) => Dynamics::Bridge {
                tau,
                steps: steps(tau)?,
                scratch: Box::new(BridgeScratch::new(net, obs)),
            },
        };
        Ok(Self {
            net,
            theta,
            data,
            initial: &model.initial,
            obs,
            dynamics,
            h: vec![0.0; net.num_reactions()],
        })
    }
}

impl TrialModel for MjpTrialModel<'_> {
    fn state_dim(&self) -> usize {
        self.net.num_species()
    }

    fn num_intervals(&self) -> usize {
        self.data.len()
    }

    fn sample_initial(&mut self, out: &mut [i64], rng: &mut RngStream) {
        self.initial.sample_into(out, rng);
    }

    fn propagate(&mut self, t: usize, from: &[i64], to: &mut [i64], rng: &mut RngStream) -> Trial {
        to.copy_from_slice(from);
        let y = self.data.observation(t);
        match &mut self.dynamics {
            Dynamics::Exact => {
                gillespie_advance(self.net, to, self.theta, self.data.interval_length(t), rng, &mut self.h);
                Trial::indicator(self.obs.matches(to, y))
            }
            Dynamics::TauLeap { tau, steps } => {
                tau_leap_advance(self.net, to, self.theta, steps[t], *tau, rng, &mut self.h, None);
                Trial::indicator(self.obs.matches(to, y))
            }
            Dynamics::Bridge { tau, steps, scratch } => {
                let (log_weight, _) = bridge_advance(self.net, scratch, self.obs, to, self.theta, y, steps[t], *tau, rng, None);
                Trial {
                    log_weight,
                    success: if log_weight > f64::NEG_INFINITY { 1.0 } else { 0.0 },
                }
            }
        }
    }
}
