use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::LatentVector;
use crate::{Error, Result, Scalar};

/// The crate-wide deterministic generator (ChaCha8, 64-bit seed).
pub type SeededRng = ChaCha8Rng;

/// Standard normal variates by the Box–Muller transform.
///
/// Each uniform pair yields two variates; the second is cached.
#[derive(Debug, Clone)]
pub struct Gaussian {
    rng: SeededRng,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Self::from_rng(SeededRng::seed_from_u64(seed))
    }

    pub fn from_rng(rng: SeededRng) -> Self {
        Self { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // u1 in (0, 1] keeps the log finite.
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn rng_mut(&mut self) -> &mut SeededRng {
        &mut self.rng
    }
}

/// Draws `n` latents of dimension `d` with i.i.d. standard normal components.
pub fn sample_gaussian_latents<T: Scalar>(n: usize, d: usize, seed: u64) -> Result<Vec<LatentVector<T>>> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!("cannot sample {n} latents of dimension {d}")));
    }
    let mut g = Gaussian::new(seed);
    (0..n)
        .map(|_| LatentVector::new((0..d).map(|_| T::of(g.sample())).collect()))
        .collect()
}

/// Derives an independent seed for a named pipeline stage.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
