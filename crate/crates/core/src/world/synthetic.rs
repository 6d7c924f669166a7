use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{sigmoid, FeatureScorer};
use crate::numerics::{dot, norm, Gaussian, LatentVector, SeededRng};
use crate::{Error, Matrix, Result};

/// Shape of a feature's decision boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// Hyperplane `a·z + c = 0`.
    Linear,
    /// Adds `curvature · (u·z)²` to the logit.
    ///
    /// `alignment` in `[0, 1)` mixes the linear direction into `u` before
    /// normalization; 0 draws `u` independently.
    Quadratic {
        curvature: f64,
        #[serde(default)]
        alignment: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub name: String,
    pub boundary: Boundary,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "one")]
    pub gain: f64,
}

fn one() -> f64 {
    1.0
}

impl FeatureConfig {
    pub fn linear(name: &str) -> Self {
        Self { name: name.into(), boundary: Boundary::Linear, offset: 0.0, gain: 1.0 }
    }

    pub fn quadratic(name: &str, curvature: f64, alignment: f64) -> Self {
        Self { name: name.into(), boundary: Boundary::Quadratic { curvature, alignment }, offset: 0.0, gain: 1.0 }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub d: usize,
    pub features: Vec<FeatureConfig>,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Latents longer than this are scaled down before scoring.
    pub latent_norm_clamp: Option<f64>,
}

impl Default for WorldConfig {
    /// d = 32 with three linear features.
    fn default() -> Self {
        Self {
            d: 32,
            features: ["eyeglasses", "male", "black_hair"].into_iter().map(FeatureConfig::linear).collect(),
            noise_sigma: 0.0,
            seed: 0,
            latent_norm_clamp: None,
        }
    }
}

/// One feature of a [`SyntheticWorld`]:
/// `σ(gain·(a·z) + curvature·(u·z)² + offset)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFeature {
    pub name: String,
    pub direction: Vec<f64>,
    pub offset: f64,
    pub curvature_direction: Vec<f64>,
    pub curvature: f64,
    pub gain: f64,
}

impl SyntheticFeature {
    pub fn logit(&self, z: &[f64]) -> f64 {
        let t = dot(&self.direction, z);
        let u = dot(&self.curvature_direction, z);
        self.gain * t + self.curvature * u * u + self.offset
    }

    pub fn is_linear(&self) -> bool {
        self.curvature == 0.0
    }
}

/// Closed-form scorer with known feature geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorld {
    pub d: usize,
    pub features: Vec<SyntheticFeature>,
    pub noise_sigma: f64,
    pub seed: u64,
    pub latent_norm_clamp: Option<f64>,
}

fn unit_gaussian(g: &mut Gaussian, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| g.sample()).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl SyntheticWorld {
    /// Draws the feature directions from the seeded generator.
    pub fn new(config: &WorldConfig) -> Result<Self> {
        if config.d < 2 {
            return Err(Error::invalid(format!("world dimension must be at least 2, got {}", config.d)));
        }
        if config.features.is_empty() {
            return Err(Error::invalid("world needs at least one feature"));
        }
        if !(config.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma must be non-negative"));
        }
        if let Some(c) = config.latent_norm_clamp {
            if !(c > 0.0) {
                return Err(Error::invalid("latent_norm_clamp must be positive"));
            }
        }
        let mut g = Gaussian::new(config.seed);
        let mut features = Vec::with_capacity(config.features.len());
        for fc in &config.features {
            if !(fc.gain > 0.0) || !fc.offset.is_finite() {
                return Err(Error::invalid(format!("feature '{}' needs a positive gain and finite offset", fc.name)));
            }
            let direction = unit_gaussian(&mut g, config.d);
            let random_u = unit_gaussian(&mut g, config.d);
            let (curvature, alignment) = match fc.boundary {
                Boundary::Linear => (0.0, 0.0),
                Boundary::Quadratic { curvature, alignment } => {
                    if !curvature.is_finite() || !(0.0..1.0).contains(&alignment) {
                        return Err(Error::invalid(format!("feature '{}' has invalid curvature settings", fc.name)));
                    }
                    (curvature, alignment)
                }
            };
            let mixed: Vec<f64> =
                direction.iter().zip(&random_u).map(|(a, u)| alignment * a + (1.0 - alignment) * u).collect();
            let n = norm(&mixed);
            features.push(SyntheticFeature {
                name: fc.name.clone(),
                curvature_direction: mixed.into_iter().map(|x| x / n).collect(),
                direction,
                offset: fc.offset,
                curvature,
                gain: fc.gain,
            });
        }
        Ok(Self {
            d: config.d,
            features,
            noise_sigma: config.noise_sigma,
            seed: config.seed,
            latent_norm_clamp: config.latent_norm_clamp,
        })
    }

    /// The linear direction of feature `j`; curved features have none.
    pub fn ground_truth_axis(&self, j: usize) -> Result<Vec<f64>> {
        let f = self
            .features
            .get(j)
            .ok_or_else(|| Error::invalid(format!("feature index {j} out of range")))?;
        if !f.is_linear() {
            return Err(Error::NoGroundTruthAxis(j));
        }
        Ok(f.direction.clone())
    }

    fn clamped<'a>(&self, z: &'a [f64], buf: &'a mut Vec<f64>) -> &'a [f64] {
        match self.latent_norm_clamp {
            Some(c) if norm(z) > c => {
                let s = c / norm(z);
                *buf = z.iter().map(|v| v * s).collect();
                buf
            }
            _ => z,
        }
    }

    // Noise is a function of (world seed, latent bits), so scoring stays pure.
    fn noise_source(&self, z: &[f64]) -> Gaussian {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for v in z {
            h.update(v.to_bits().to_le_bytes());
        }
        let digest: [u8; 32] = h.finalize().into();
        Gaussian::from_rng(SeededRng::from_seed(digest))
    }

    /// Scores one latent.
    pub fn score(&self, z: &[f64]) -> Vec<f64> {
        let mut buf = Vec::new();
        let z = self.clamped(z, &mut buf);
        let mut noise = (self.noise_sigma > 0.0).then(|| self.noise_source(z));
        self.features
            .iter()
            .map(|f| {
                let eps = noise.as_mut().map_or(0.0, |g| self.noise_sigma * g.sample());
                sigmoid(f.logit(z) + eps).clamp(0.0, 1.0)
            })
            .collect()
    }
}

impl FeatureScorer for SyntheticWorld {
    fn dim(&self) -> usize {
        self.d
    }

    fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    fn feature_count(&self) -> usize {
        self.features.len()
    }

    fn score_rows(&self, latents: &[LatentVector<f64>]) -> Result<Matrix> {
        let m = self.features.len();
        let mut out = Matrix::zeros((latents.len(), m));
        for (mut row, z) in out.rows_mut().into_iter().zip(latents) {
            for (slot, s) in row.iter_mut().zip(self.score(z.as_slice())) {
                *slot = s;
            }
        }
        Ok(out)
    }
}
