//! The four study models: pure death, dimerisation, Lotka–Volterra and SEIR.

mod death;
mod presets;
mod prior;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::ObsMatrix;
use crate::error::{Error, Result};
use crate::mjp::ReactionNetwork;
use crate::rng::RngStream;

pub use death::{exact_death_likelihood, DirectDeathEstimator};
pub use presets::{preset, preset_dataset, synthesize_dataset, Preset, SynthSettings, PRESET_NAMES};
pub use prior::{Marginal, Prior};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Death,
    Dimer,
    Lv,
    Seir,
}

impl ModelName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Death => "death",
            ModelName::Dimer => "dimer",
            ModelName::Lv => "lv",
            ModelName::Seir => "seir",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "death" => Ok(ModelName::Death),
            "dimer" | "dimerisation" => Ok(ModelName::Dimer),
            "lv" | "lotka-volterra" => Ok(ModelName::Lv),
            "seir" => Ok(ModelName::Seir),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

/// Dynamics assumed by the inferential model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InferentialKind {
    ExactMjp,
    TauLeap { tau: f64 },
}

/// Tau used for the dimerisation and Lotka–Volterra inferential models.
pub const DEFAULT_TAU: f64 = 0.1;

/// Law of the state at the initial time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Fixed(Vec<i64>),
    /// Independent discrete uniforms on the inclusive ranges.
    DiscreteUniform(Vec<(i64, i64)>),
}

impl InitialState {
    pub fn sample_into(&self, out: &mut [i64], rng: &mut RngStream) {
        match self {
            InitialState::Fixed(x) => out.copy_from_slice(x),
            InitialState::DiscreteUniform(ranges) => {
                for (o, &(lo, hi)) in out.iter_mut().zip(ranges) {
                    *o = lo + rng.below((hi - lo + 1) as usize) as i64;
                }
            }
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, InitialState::Fixed(_))
    }
}

/// Fixed SEIR rates that are not inferred: births per year and the natural death rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeirConstants {
    pub birth_rate: f64,
    pub natural_death_rate: f64,
}

impl SeirConstants {
    /// Stand-in values; real analyses must supply their own.
    pub const PLACEHOLDER: SeirConstants = SeirConstants {
        birth_rate: 5.0,
        natural_death_rate: 0.1,
    };
}

/// A reaction network bundled with its prior, initial law and observation scheme.
#[derive(Clone, Debug)]
pub struct StudyModel {
    pub name: ModelName,
    pub network: ReactionNetwork,
    pub prior: Prior,
    pub initial: InitialState,
    pub inferential: InferentialKind,
    pub obs_matrix: ObsMatrix,
    pub param_names: Vec<&'static str>,
}

impl StudyModel {
    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_obs_matrix(mut self, obs: ObsMatrix) -> Self {
        self.obs_matrix = obs;
        self
    }

    pub fn with_inferential(mut self, kind: InferentialKind) -> Self {
        self.inferential = kind;
        self
    }

    pub fn theta_dim(&self) -> usize {
        self.network.theta_dim()
    }
}

pub fn build_model(name: ModelName) -> Result<StudyModel> {
    Ok(match name {
        ModelName::Death => StudyModel {
            name,
            network: ReactionNetwork::new(vec![vec![-1]], 1, |x, th, h| h[0] = th[0] * x[0] as f64),
            prior: Prior::new(vec![Marginal::Gamma { shape: 10.0, rate: 1000.0 }]),
            initial: InitialState::Fixed(vec![100]),
            inferential: InferentialKind::ExactMjp,
            obs_matrix: ObsMatrix::identity(1),
            param_names: vec!["theta"],
        },
        ModelName::Dimer => StudyModel {
            name,
            network: ReactionNetwork::new(vec![vec![-2, 1], vec![2, -1]], 2, |x, th, h| {
                let p = x[0] as f64;
                h[0] = th[0] * p * (p - 1.0) / 2.0;
                h[1] = th[1] * x[1] as f64;
            }),
            prior: Prior::new(vec![
                Marginal::Gamma { shape: 2.0, rate: 500.0 },
                Marginal::Gamma { shape: 2.0, rate: 2.0 },
            ]),
            initial: InitialState::Fixed(vec![20, 1]),
            inferential: InferentialKind::TauLeap { tau: DEFAULT_TAU },
            obs_matrix: ObsMatrix::identity(2),
            param_names: vec!["theta1", "theta2"],
        },
        ModelName::Lv => StudyModel {
            name,
            network: ReactionNetwork::new(vec![vec![1, 0], vec![-1, 1], vec![0, -1]], 3, |x, th, h| {
                let (prey, pred) = (x[0] as f64, x[1] as f64);
                h[0] = th[0] * prey;
                h[1] = th[1] * prey * pred;
                h[2] = th[2] * pred;
            }),
            prior: Prior::new(vec![Marginal::Gamma { shape: 1.0, rate: 1.0 }; 3]),
            initial: InitialState::Fixed(vec![50, 50]),
            inferential: InferentialKind::TauLeap { tau: DEFAULT_TAU },
            obs_matrix: ObsMatrix::identity(2),
            param_names: vec!["theta1", "theta2", "theta3"],
        },
        ModelName::Seir => build_seir(SeirConstants::PLACEHOLDER),
    })
}

/// SEIR with births and natural deaths; species order `(S, E, I, R)`,
/// parameters `θ = (β, μ, α)`, and `R` (cumulative disease deaths) observed.
pub fn build_seir(constants: SeirConstants) -> StudyModel {
    let SeirConstants {
        birth_rate: a,
        natural_death_rate: m,
    } = constants;
    let columns = vec![
        vec![1, 0, 0, 0],
        vec![-1, 0, 0, 0],
        vec![-1, 1, 0, 0],
        vec![0, -1, 0, 0],
        vec![0, -1, 1, 0],
        vec![0, 0, -1, 0],
        vec![0, 0, -1, 1],
    ];
    let network = ReactionNetwork::new(columns, 3, move |x, th, h| {
        let (s, e, i) = (x[0] as f64, x[1] as f64, x[2] as f64);
        let (beta, mu, alpha) = (th[0], th[1], th[2]);
        h[0] = a;
        h[1] = m * s;
        h[2] = beta * s * i;
        h[3] = m * e;
        h[4] = mu / alpha * e;
        h[5] = m * i;
        h[6] = mu / (1.0 - alpha) * i;
    });
    StudyModel {
        name: ModelName::Seir,
        network,
        prior: Prior::new(vec![
            Marginal::Beta { a: 2.0, b: 10.0 },
            Marginal::Beta { a: 2.0, b: 5.0 },
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
        ]),
        initial: InitialState::DiscreteUniform(vec![(10, 50), (0, 0), (0, 20), (0, 0)]),
        inferential: InferentialKind::ExactMjp,
        obs_matrix: ObsMatrix::select(4, &[3]),
        param_names: vec!["beta", "mu", "alpha"],
    }
}
