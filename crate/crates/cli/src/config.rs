//! Experiment configuration: a JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use frankenfilter::dataset::read_dataset;
use frankenfilter::filters::{FilterEstimator, FilterSpec, Proposal};
use frankenfilter::models::{build_model, preset_dataset, DirectDeathEstimator, InitialState, Marginal, ModelName, Prior, StudyModel};
use frankenfilter::{Dataset, DatasetMeta, LikelihoodEstimator, ObsMatrix, SuccessMeasure, UNBOUNDED};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// General Frankenfilter.
    Ff,
    /// Alive filter with a hard threshold.
    Apf,
    /// Alive filter without an upper bound.
    Alive,
    /// Bootstrap particle filter.
    Bspf,
    /// Exact likelihood (death model only).
    Direct,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub kind: Option<FilterKind>,
    pub s_target: Option<f64>,
    pub m_minus: Option<usize>,
    pub m_plus: Option<usize>,
    pub n_particles: Option<usize>,
    pub proposal: Option<Proposal>,
    pub guard: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmmhSection {
    pub iterations: Option<usize>,
    pub theta0: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    /// Replaces the model's prior; one marginal per parameter.
    pub prior: Option<Vec<Marginal>>,
    /// Standard deviations of the log-scale random walk before the `gamma` factor.
    pub proposal_sd: Option<Vec<f64>>,
    /// Row-major log-scale innovation covariance before the `gamma` factor.
    pub proposal_cov: Option<Vec<f64>>,
    pub pilot_iterations: Option<usize>,
    pub burn_in: Option<f64>,
}

/// A preset name, or a dataset CSV with its JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    Preset(String),
    Path(PathBuf),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelName>,
    pub dataset: Option<DatasetSource>,
    /// Parameter value for single-point commands.
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub pmmh: PmmhSection,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A model, dataset and sidecar resolved from a [`DatasetSource`].
pub struct Loaded {
    pub label: String,
    pub model: StudyModel,
    pub data: Dataset,
    pub meta: DatasetMeta,
}

pub fn load_dataset(source: &DatasetSource) -> Result<Loaded, CliError> {
    match source {
        DatasetSource::Preset(name) => {
            let (model, data, meta) = preset_dataset(name, None)?;
            Ok(Loaded {
                label: name.clone(),
                model,
                data,
                meta,
            })
        }
        DatasetSource::Path(path) => {
            let (data, meta) = read_dataset(path)?;
            let name: ModelName = meta.model.parse()?;
            let model = build_model(name)?
                .with_initial(InitialState::Fixed(meta.x0.clone()))
                .with_obs_matrix(ObsMatrix::from_rows(&meta.obs_matrix)?);
            if model.network.num_species() != meta.x0.len() {
                return Err(CliError::Config(format!(
                    "sidecar x0 has {} species, model `{name}` has {}",
                    meta.x0.len(),
                    model.network.num_species()
                )));
            }
            Ok(Loaded {
                label: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                model,
                data,
                meta,
            })
        }
    }
}

/// Checks every parameter-shaped field against the model's dimension.
pub fn validate(config: &ExperimentConfig, model: &StudyModel) -> Result<(), CliError> {
    let d = model.theta_dim();
    if let Some(name) = config.model {
        if name != model.name {
            return Err(CliError::Config(format!("config names model `{name}` but the dataset is `{}`", model.name)));
        }
    }
    let check = |field: &str, len: Option<usize>, expected: usize| match len {
        Some(n) if n != expected => Err(CliError::Config(format!(
            "{field} has length {n}; model `{}` expects {expected}",
            model.name
        ))),
        _ => Ok(()),
    };
    check("theta", config.theta.as_ref().map(Vec::len), d)?;
    check("pmmh.theta0", config.pmmh.theta0.as_ref().map(Vec::len), d)?;
    check("pmmh.prior", config.pmmh.prior.as_ref().map(Vec::len), d)?;
    check("pmmh.proposal_sd", config.pmmh.proposal_sd.as_ref().map(Vec::len), d)?;
    check("pmmh.proposal_cov", config.pmmh.proposal_cov.as_ref().map(Vec::len), d * d)?;
    Ok(())
}

pub fn apply_prior(model: &mut StudyModel, prior: &Option<Vec<Marginal>>) {
    if let Some(marginals) = prior {
        model.prior = Prior::new(marginals.clone());
    }
}

/// Builds the estimator described by `filter` for `model`.
pub fn build_estimator(
    model: Arc<StudyModel>,
    meta: &DatasetMeta,
    filter: &FilterSection,
) -> Result<Box<dyn LikelihoodEstimator>, CliError> {
    let kind = filter.kind.ok_or_else(|| CliError::Config("no filter kind given".into()))?;
    let need_s = || filter.s_target.ok_or_else(|| CliError::Config(format!("filter `{kind:?}` needs s_target")));
    let need_m_plus = || filter.m_plus.ok_or_else(|| CliError::Config(format!("filter `{kind:?}` needs m_plus")));
    let whole = |s: f64| -> Result<usize, CliError> {
        if s.fract() != 0.0 || s < 2.0 {
            return Err(CliError::Config(format!("filter `{kind:?}` needs an integer s_target >= 2, got {s}")));
        }
        Ok(s as usize)
    };
    let spec = match kind {
        FilterKind::Direct => {
            if model.name != ModelName::Death {
                return Err(CliError::Config("the direct estimator exists only for the death model".into()));
            }
            return Ok(Box::new(DirectDeathEstimator::new(meta.x0[0])));
        }
        FilterKind::Ff => FilterSpec::Frankenfilter {
            s_target: need_s()?,
            m_minus: filter.m_minus.unwrap_or(0),
            m_plus: filter.m_plus.unwrap_or(UNBOUNDED),
            success: SuccessMeasure::IndicatorMatch,
        },
        FilterKind::Apf => FilterSpec::AliveHard {
            s_target: whole(need_s()?)?,
            m_plus: need_m_plus()?,
        },
        FilterKind::Alive => FilterSpec::Alive {
            s_target: whole(need_s()?)?,
            guard: filter.guard.unwrap_or(frankenfilter::filters::DEFAULT_ABORT_GUARD),
        },
        FilterKind::Bspf => FilterSpec::Bootstrap {
            n_particles: filter
                .n_particles
                .ok_or_else(|| CliError::Config("filter `Bspf` needs n_particles".into()))?,
        },
    };
    let proposal = filter.proposal.unwrap_or_default();
    if proposal == Proposal::Bridge && matches!(model.inferential, frankenfilter::models::InferentialKind::ExactMjp) {
        return Err(frankenfilter::Error::BridgeOnExactMjp.into());
    }
    Ok(Box::new(FilterEstimator::new(model, spec, proposal)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"{
            "model": "death",
            "dataset": {"preset": "D50"},
            "filter": {"kind": "ff", "s_target": 50, "m_plus": 400},
            "pmmh": {"iterations": 100, "theta0": [0.01], "prior": [{"dist": "gamma", "shape": 10, "rate": 1000}]},
            "seed": 3
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.filter.kind, Some(FilterKind::Ff));
        assert_eq!(cfg.dataset, Some(DatasetSource::Preset("D50".into())));
        let loaded = load_dataset(cfg.dataset.as_ref().unwrap()).unwrap();
        validate(&cfg, &loaded.model).unwrap();
    }

    #[test]
    fn rejects_wrong_dimension() {
        let cfg = ExperimentConfig {
            theta: Some(vec![0.1, 0.2]),
            ..Default::default()
        };
        let loaded = load_dataset(&DatasetSource::Preset("D10".into())).unwrap();
        assert!(matches!(validate(&cfg, &loaded.model), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"filtre": {}}"#).is_err());
    }

    #[test]
    fn bridge_on_exact_dynamics_is_a_config_error() {
        let loaded = load_dataset(&DatasetSource::Preset("D10".into())).unwrap();
        let filter = FilterSection {
            kind: Some(FilterKind::Ff),
            s_target: Some(5.0),
            proposal: Some(Proposal::Bridge),
            ..Default::default()
        };
        let err = build_estimator(Arc::new(loaded.model), &loaded.meta, &filter).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }
}
