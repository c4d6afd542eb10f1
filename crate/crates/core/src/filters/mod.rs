//! Likelihood estimators: the Frankenfilter family, the alive filter (with
//! and without a hard threshold) and the bootstrap particle filter.

mod one_step;
mod sequential;
mod trial;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use one_step::{ancestor_sample, frankenfilter_basic, frankenfilter_one_step, OneStepOutcome};
pub use sequential::{
    alive_filter, alive_hard_threshold, bootstrap_pf, frankenfilter_general, frankenfilter_observed, IntervalObserver,
    ParticleBuffer, DEFAULT_ABORT_GUARD,
};
pub use trial::{BernoulliTrials, MjpTrialModel, Proposal, Trial, TrialModel};

use crate::config::{FilterConfig, SuccessMeasure};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::estimate::LikelihoodEstimate;
use crate::estimator::LikelihoodEstimator;
use crate::models::StudyModel;
use crate::rng::RngStream;

/// Which filter to run and its size parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FilterSpec {
    /// The general Frankenfilter.
    #[serde(rename = "ff")]
    Frankenfilter {
        s_target: f64,
        #[serde(default)]
        m_minus: usize,
        m_plus: usize,
        #[serde(default = "default_success")]
        success: SuccessMeasure,
    },
    /// Alive filter with a hard threshold (biased).
    #[serde(rename = "apf")]
    AliveHard { s_target: usize, m_plus: usize },
    /// Alive filter with no upper bound on simulations.
    Alive {
        s_target: usize,
        #[serde(default = "default_guard")]
        guard: u64,
    },
    #[serde(rename = "bspf")]
    Bootstrap { n_particles: usize },
}

fn default_success() -> SuccessMeasure {
    SuccessMeasure::IndicatorMatch
}

fn default_guard() -> u64 {
    DEFAULT_ABORT_GUARD
}

impl FilterSpec {
    pub fn ff(s_target: f64, m_plus: usize) -> Self {
        FilterSpec::Frankenfilter {
            s_target,
            m_minus: 0,
            m_plus,
            success: SuccessMeasure::IndicatorMatch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FilterSpec::Frankenfilter {
            s_target,
            m_minus,
            m_plus,
            success,
        } = self
        {
            FilterConfig::new(*s_target, *m_minus, *m_plus, *success)?;
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            FilterSpec::Frankenfilter {
                s_target,
                m_minus,
                m_plus,
                ..
            } => {
                if *m_minus == 0 {
                    format!("FF(s={s_target}, m+={m_plus})")
                } else {
                    format!("FF(s={s_target}, m-={m_minus}, m+={m_plus})")
                }
            }
            FilterSpec::AliveHard { s_target, m_plus } => format!("APF(s={s_target}, m+={m_plus})"),
            FilterSpec::Alive { s_target, .. } => format!("Alive(s={s_target})"),
            FilterSpec::Bootstrap { n_particles } => format!("BSPF(n={n_particles})"),
        }
    }

    /// Runs the filter on any trial model.
    pub fn run<M: TrialModel + ?Sized>(&self, model: &mut M, rng: &mut RngStream) -> Result<LikelihoodEstimate> {
        match self {
            FilterSpec::Frankenfilter {
                s_target,
                m_minus,
                m_plus,
                success,
            } => {
                let cfg = FilterConfig::new(*s_target, *m_minus, *m_plus, *success)?;
                frankenfilter_general(model, &cfg, rng)
            }
            FilterSpec::AliveHard { s_target, m_plus } => alive_hard_threshold(model, *s_target, *m_plus, rng),
            FilterSpec::Alive { s_target, guard } => alive_filter(model, *s_target, *guard, rng),
            FilterSpec::Bootstrap { n_particles } => bootstrap_pf(model, *n_particles, rng),
        }
    }
}

/// A filter bound to a study model; estimates the likelihood of any dataset.
#[derive(Clone, Debug)]
pub struct FilterEstimator {
    pub model: Arc<StudyModel>,
    pub spec: FilterSpec,
    pub proposal: Proposal,
}

impl FilterEstimator {
    pub fn new(model: Arc<StudyModel>, spec: FilterSpec, proposal: Proposal) -> Result<Self> {
        spec.validate()?;
        Ok(Self { model, spec, proposal })
    }
}

impl LikelihoodEstimator for FilterEstimator {
    fn estimate(&self, theta: &[f64], data: &Dataset, rng: &mut RngStream) -> Result<LikelihoodEstimate> {
        let mut trials = MjpTrialModel::new(&self.model, theta, data, self.proposal)?;
        self.spec.run(&mut trials, rng)
    }

    fn label(&self) -> String {
        match self.proposal {
            Proposal::Forward => self.spec.label(),
            Proposal::Bridge => format!("{} bridge", self.spec.label()),
        }
    }
}
