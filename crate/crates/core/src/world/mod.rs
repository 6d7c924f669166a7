//! Feature scorers: the composition "generator, then classifier" seen as a
//! single map from latents to per-feature probabilities.

mod external;
mod synthetic;

pub use external::ExternalScorer;
pub use synthetic::{Boundary, FeatureConfig, SyntheticFeature, SyntheticWorld, WorldConfig};

use crate::numerics::{check_dim, LatentVector};
use crate::{Error, Matrix, Result};

/// Maps latents to probabilities of `feature_count()` binary features.
pub trait FeatureScorer {
    fn dim(&self) -> usize;

    fn feature_names(&self) -> Vec<String>;

    fn feature_count(&self) -> usize {
        self.feature_names().len()
    }

    /// Scores a batch whose dimensions are already validated.
    ///
    /// Implementations return an `n × m` matrix; [`score_batch`] checks it.
    fn score_rows(&self, latents: &[LatentVector<f64>]) -> Result<Matrix>;
}

impl<S: FeatureScorer + ?Sized> FeatureScorer for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn feature_names(&self) -> Vec<String> {
        (**self).feature_names()
    }
    fn feature_count(&self) -> usize {
        (**self).feature_count()
    }
    fn score_rows(&self, latents: &[LatentVector<f64>]) -> Result<Matrix> {
        (**self).score_rows(latents)
    }
}

impl FeatureScorer for Box<dyn FeatureScorer + Send + Sync> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn feature_names(&self) -> Vec<String> {
        (**self).feature_names()
    }
    fn feature_count(&self) -> usize {
        (**self).feature_count()
    }
    fn score_rows(&self, latents: &[LatentVector<f64>]) -> Result<Matrix> {
        (**self).score_rows(latents)
    }
}

/// Scores `latents`; row `i`, column `j` is the probability of feature `j`.
pub fn score_batch<S: FeatureScorer + ?Sized>(scorer: &S, latents: &[LatentVector<f64>]) -> Result<Matrix> {
    for z in latents {
        check_dim(scorer.dim(), z.dim())?;
    }
    let scores = scorer.score_rows(latents)?;
    let want = (latents.len(), scorer.feature_count());
    if scores.dim() != want {
        return Err(Error::Protocol(format!("scorer returned shape {:?}, expected {want:?}", scores.dim())));
    }
    if let Some(v) = scores.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Protocol(format!("score {v} is not a probability")));
    }
    Ok(scores)
}

/// Index of a named feature.
pub fn feature_index<S: FeatureScorer + ?Sized>(scorer: &S, name: &str) -> Result<usize> {
    scorer
        .feature_names()
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::invalid(format!("scorer has no feature named '{name}'")))
}

/// Logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
