use crate::dataset::Dataset;
use crate::error::Result;
use crate::estimate::LikelihoodEstimate;
use crate::rng::RngStream;

/// Anything that maps `(θ, data, stream)` to a nonnegative likelihood estimate.
///
/// Implementations must be deterministic given their inputs and the stream
/// state, so that PMMH chains and replicate studies are reproducible.
pub trait LikelihoodEstimator: Send + Sync {
    fn estimate(&self, theta: &[f64], data: &Dataset, rng: &mut RngStream) -> Result<LikelihoodEstimate>;

    /// Short label used in reports, e.g. `"FF(s=50, m+=400)"`.
    fn label(&self) -> String;
}

impl<E: LikelihoodEstimator + ?Sized> LikelihoodEstimator for Box<E> {
    fn estimate(&self, theta: &[f64], data: &Dataset, rng: &mut RngStream) -> Result<LikelihoodEstimate> {
        (**self).estimate(theta, data, rng)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

impl<E: LikelihoodEstimator + ?Sized> LikelihoodEstimator for std::sync::Arc<E> {
    fn estimate(&self, theta: &[f64], data: &Dataset, rng: &mut RngStream) -> Result<LikelihoodEstimate> {
        (**self).estimate(theta, data, rng)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

/// Wraps a closure as an estimator; handy for surrogates in tests.
pub struct FnEstimator<F> {
    label: String,
    f: F,
}

impl<F> FnEstimator<F>
where
    F: Fn(&[f64], &Dataset, &mut RngStream) -> Result<LikelihoodEstimate> + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self { label: label.into(), f }
    }
}

impl<F> LikelihoodEstimator for FnEstimator<F>
where
    F: Fn(&[f64], &Dataset, &mut RngStream) -> Result<LikelihoodEstimate> + Send + Sync,
{
    fn estimate(&self, theta: &[f64], data: &Dataset, rng: &mut RngStream) -> Result<LikelihoodEstimate> {
        (self.f)(theta, data, rng)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}
