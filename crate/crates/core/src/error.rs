use thiserror::Error;

/// Errors raised by the filters, tuning routines and the PMMH driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("m_minus = 0 requires s_target ({s_target}) to exceed the success supremum ({sup})")]
    ThresholdBelowSupremum { s_target: f64, sup: f64 },

    #[error("tau ({tau}) does not divide the interval length ({dt}) into an integer number of steps")]
    NonIntegerSteps { dt: f64, tau: f64 },

    #[error("singular matrix: smallest pivot {pivot:e} below threshold")]
    Singular { pivot: f64 },

    #[error("CLE approximation unavailable at interval {interval}: covariance is not positive definite")]
    CleUnavailable { interval: usize },

    #[error("alive filter abort guard exceeded after {simulations} simulations")]
    AbortGuard { simulations: u64 },

    #[error("ancestor sampling over zero total weight")]
    ZeroWeight,

    #[error("estimator dead at theta = {theta:?}: every replicate returned a zero estimate")]
    EstimatorDead { theta: Vec<f64> },

    #[error("degenerate chain: sample covariance is singular")]
    DegenerateChain,

    #[error("no bracket: evaluator gave {at_lo} at {lo} and {at_hi} at {hi} against target {target}")]
    NoBracket {
        lo: f64,
        hi: f64,
        at_lo: f64,
        at_hi: f64,
        target: f64,
    },

    #[error("knob bisection failed at theta = {theta:?}: {reason}")]
    PilotBracket { theta: Vec<f64>, reason: String },

    #[error("state space exceeded {cap} states")]
    StateSpaceBlowup { cap: usize },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("bridge proposals need a tau-leap inferential model")]
    BridgeOnExactMjp,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
