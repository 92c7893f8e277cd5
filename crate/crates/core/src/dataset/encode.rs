use rand::Rng;

use super::pca::PcaModel;
use crate::error::Result;
use crate::scalar::Scalar;

/// Bernoulli raster `[steps x width]`: column `i < probs.len()` fires with
/// probability `probs[i]` at every step, the remaining columns stay silent.
pub fn encode_probabilities<S: Scalar, R: Rng + ?Sized>(
    probs: &[f64],
    steps: usize,
    width: usize,
    rng: &mut R,
) -> Vec<S> {
    assert!(width >= probs.len(), "raster narrower than the feature vector");
    let mut raster = vec![S::zero(); steps * width];
    for row in raster.chunks_mut(width) {
        for (cell, &p) in row.iter_mut().zip(probs) {
            if rng.random::<f64>() < p {
                *cell = S::one();
            }
        }
    }
    raster
}

/// Normalizes PCA projections with the model's training-split bounds and draws
/// a fresh rate-coded raster `[steps x n_components]`.
pub fn rate_encode<S: Scalar, R: Rng + ?Sized>(
    features: &[f64],
    pca: &PcaModel,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<S>> {
    let probs = pca.normalize(features)?;
    Ok(encode_probabilities(&probs, steps, probs.len(), rng))
}
