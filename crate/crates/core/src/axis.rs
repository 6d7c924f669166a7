//! Feature-axis regression: the linear baseline for adding a feature.
//!
//! Scores are regressed on latents by least squares; the normalized slope
//! vector is the feature axis, and a latent is edited by stepping along it.

use std::fs;
use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::numerics::{check_dim, norm, ols_fit, stack_latents, LatentVector};
use crate::{Error, Result, Scalar};

/// Default clamp for [`amplify_scores`].
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Unit direction along which a feature's score increases.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureAxis<T> {
    pub feature_name: String,
    pub direction: Vec<T>,
    pub intercept: T,
    pub fit_r2: T,
    pub n_fit: usize,
    pub arctanh_used: bool,
}

/// `arctanh(clamp(2p − 1, −1 + ε, 1 − ε))` per entry.
pub fn amplify_scores<T: Scalar>(p: &[T], epsilon: T) -> Result<Vec<T>> {
    if !(epsilon > T::zero() && epsilon < T::of(0.5)) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 0.5), got {epsilon}")));
    }
    let two = T::of(2.0);
    let hi = T::one() - epsilon;
    p.iter()
        .map(|&v| {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::invalid(format!("score {v} is not a probability")));
            }
            Ok((two * v - T::one()).max(-hi).min(hi).atanh())
        })
        .collect()
}

/// Fits a feature axis to `(latents, scores)`.
pub fn fit_feature_axis<T: Scalar>(
    feature_name: &str,
    latents: &[LatentVector<T>],
    scores: &[T],
    use_arctanh: bool,
    epsilon: T,
) -> Result<FeatureAxis<T>> {
    if latents.len() != scores.len() {
        return Err(Error::invalid(format!("{} latents but {} scores", latents.len(), scores.len())));
    }
    let x = stack_latents(latents)?;
    let y: Array1<T> = if use_arctanh {
        amplify_scores(scores, epsilon)?.into()
    } else {
        scores.to_vec().into()
    };
    let fit = ols_fit(x.view(), y.view())?;
    let length = norm(&fit.slopes);
    if !(length > T::zero()) {
        return Err(Error::DegenerateAxis);
    }
    Ok(FeatureAxis {
        feature_name: feature_name.to_string(),
        direction: fit.slopes.iter().map(|&s| s / length).collect(),
        intercept: fit.intercept,
        fit_r2: fit.r_squared,
        n_fit: latents.len(),
        arctanh_used: use_arctanh,
    })
}

impl<T: Scalar> FeatureAxis<T> {
    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    /// Hex SHA-256 of the direction's 32-bit encoding.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.direction {
            h.update((v.f64() as f32).to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// `z + multiplier · direction`.
pub fn shift<T: Scalar>(z: &LatentVector<T>, axis: &FeatureAxis<T>, multiplier: T) -> Result<LatentVector<T>> {
    z.add_scaled(&axis.direction, multiplier)
}

/// `z + Σ multiplier_j · direction_j`.
pub fn shift_multi<T: Scalar>(z: &LatentVector<T>, axes: &[FeatureAxis<T>], multipliers: &[T]) -> Result<LatentVector<T>> {
    if axes.len() != multipliers.len() {
        return Err(Error::invalid(format!("{} axes but {} multipliers", axes.len(), multipliers.len())));
    }
    let mut total = vec![T::zero(); z.dim()];
    for (axis, &n) in axes.iter().zip(multipliers) {
        check_dim(z.dim(), axis.dim())?;
        for (t, &a) in total.iter_mut().zip(&axis.direction) {
            *t += n * a;
        }
    }
    z.add_scaled(&total, T::one())
}

#[derive(Serialize, Deserialize)]
struct AxisFile {
    feature_name: String,
    d: usize,
    direction: Vec<f64>,
    intercept: f64,
    fit_r2: f64,
    n_fit: usize,
    arctanh_used: bool,
}

impl<T: Scalar> FeatureAxis<T> {
    pub fn to_json(&self) -> Result<String> {
        let file = AxisFile {
            feature_name: self.feature_name.clone(),
            d: self.dim(),
            direction: self.direction.iter().map(|v| v.f64()).collect(),
            intercept: self.intercept.f64(),
            fit_r2: self.fit_r2.f64(),
            n_fit: self.n_fit,
            arctanh_used: self.arctanh_used,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AxisFile = serde_json::from_str(text).map_err(|e| Error::format(format!("axis file: {e}")))?;
        if file.direction.len() != file.d || file.d == 0 {
            return Err(Error::format(format!("axis declares d = {} but has {} components", file.d, file.direction.len())));
        }
        if file.direction.iter().any(|v| !v.is_finite()) || (norm(&file.direction) - 1.0).abs() > 1e-6 {
            return Err(Error::format("axis direction is not a finite unit vector"));
        }
        Ok(Self {
            feature_name: file.feature_name,
            direction: file.direction.into_iter().map(T::of).collect(),
            intercept: T::of(file.intercept),
            fit_r2: T::of(file.fit_r2),
            n_fit: file.n_fit,
            arctanh_used: file.arctanh_used,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::numerics::{cosine, sample_gaussian_latents};
    use crate::world::{score_batch, FeatureConfig, SyntheticWorld, WorldConfig};

    fn unit_axis(direction: Vec<f64>) -> FeatureAxis<f64> {
        FeatureAxis { feature_name: "f".into(), direction, intercept: 0.0, fit_r2: 1.0, n_fit: 0, arctanh_used: false }
    }

    #[test]
    fn amplify_fixed_points() {
        let out = amplify_scores(&[0.5, 1.0, 0.0], 1e-6).unwrap();
        assert_eq!(out[0], 0.0);
        // Oracle: 0.5·ln((2 − ε)/ε).
        let expected = 0.5 * ((2.0 - 1e-6) / 1e-6f64).ln();
        assert!((out[1] - expected).abs() < 1e-9);
        assert!((out[1] - 7.254).abs() < 1e-3);
        assert!((out[2] + out[1]).abs() < 1e-9);
    }

    #[test]
    fn amplify_rejects_bad_epsilon() {
        assert!(amplify_scores(&[0.5], 0.0).is_err());
        assert!(amplify_scores(&[0.5], 0.5).is_err());
        assert!(amplify_scores(&[1.5], 0.1).is_err());
    }

    #[test]
    fn exact_linear_scores() {
        let zs = sample_gaussian_latents::<f64>(50, 2, 3).unwrap();
        let s: Vec<f64> = zs.iter().map(|z| z.as_slice()[0]).collect();
        let axis = fit_feature_axis("x", &zs, &s, false, DEFAULT_EPSILON).unwrap();
        assert!((axis.direction[0] - 1.0).abs() < 1e-8);
        assert!(axis.direction[1].abs() < 1e-8);
    }

    #[test]
    fn scale_invariance() {
        let zs = sample_gaussian_latents::<f64>(200, 6, 10).unwrap();
        let s: Vec<f64> = zs.iter().map(|z| (z.as_slice()[1] - 0.3 * z.as_slice()[4]).tanh()).collect();
        let scaled: Vec<f64> = s.iter().map(|v| v * 5.0).collect();
        let a = fit_feature_axis("x", &zs, &s, false, DEFAULT_EPSILON).unwrap();
        let b = fit_feature_axis("x", &zs, &scaled, false, DEFAULT_EPSILON).unwrap();
        for (x, y) in a.direction.iter().zip(&b.direction) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_axis() {
        let zs = sample_gaussian_latents::<f64>(20, 3, 1).unwrap();
        let s = vec![0.5; 20];
        assert!(matches!(fit_feature_axis("x", &zs, &s, true, DEFAULT_EPSILON), Err(Error::DegenerateAxis)));
    }

    #[test]
    fn recovers_synthetic_axis() {
        let world = SyntheticWorld::new(&WorldConfig { d: 32, features: vec![FeatureConfig::linear("f")], seed: 17, ..Default::default() }).unwrap();
        let zs = sample_gaussian_latents(10_000, 32, 18).unwrap();
        let scores = score_batch(&world, &zs).unwrap().column(0).to_vec();
        let axis = fit_feature_axis("f", &zs, &scores, true, DEFAULT_EPSILON).unwrap();
        assert!((norm(&axis.direction) - 1.0).abs() < 1e-9);
        assert!(cosine(&axis.direction, &world.ground_truth_axis(0).unwrap()) >= 0.95);
    }

    #[test]
    fn shift_basics() {
        let z = LatentVector::<f64>::zeros(3);
        let e1 = unit_axis(vec![1.0, 0.0, 0.0]);
        assert_eq!(shift(&z, &e1, 1.0).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        let z = LatentVector::new(vec![0.3, -1.0, 2.0]).unwrap();
        assert_eq!(shift(&z, &e1, 0.0).unwrap(), z);
        assert!(shift(&LatentVector::zeros(2), &e1, 1.0).is_err());
    }

    #[test]
    fn shift_multi_cases() {
        let z = LatentVector::new(vec![0.5, 0.5, -1.0]).unwrap();
        let e1 = unit_axis(vec![1.0, 0.0, 0.0]);
        let e2 = unit_axis(vec![0.0, 1.0, 0.0]);
        let both = shift_multi(&z, &[e1.clone(), e2.clone()], &[1.0, 1.0]).unwrap();
        let disp: Vec<f64> = both.as_slice().iter().zip(z.as_slice()).map(|(a, b)| a - b).collect();
        assert!((norm(&disp) - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(shift_multi(&z, std::slice::from_ref(&e1), &[0.7]).unwrap(), shift(&z, &e1, 0.7).unwrap());
        assert!(shift_multi(&z, &[e1], &[1.0, 2.0]).is_err());
        assert_eq!(shift_multi(&z, &[], &[]).unwrap(), z);
    }

    #[test]
    fn json_round_trip() {
        let zs = sample_gaussian_latents::<f64>(40, 4, 2).unwrap();
        let s: Vec<f64> = zs.iter().map(|z| 0.3 * z.as_slice()[0] + 0.1 * z.as_slice()[2]).collect();
        let axis = fit_feature_axis("x", &zs, &s, false, DEFAULT_EPSILON).unwrap();
        let back = FeatureAxis::<f64>::from_json(&axis.to_json().unwrap()).unwrap();
        assert_eq!(back, axis);
        assert!(FeatureAxis::<f64>::from_json("{\"feature_name\": \"x\"").is_err());
    }

    proptest! {
        #[test]
        fn amplify_is_odd(p in 0.0f64..=1.0) {
            let a = amplify_scores(&[p, 1.0 - p], 1e-6).unwrap();
            prop_assert!((a[0] + a[1]).abs() < 1e-9);
        }

        #[test]
        fn shift_moves_by_multiplier(
            z in prop::collection::vec(-5.0f64..5.0, 4),
            raw in prop::collection::vec(-1.0f64..1.0, 4),
            n in -10.0f64..10.0,
        ) {
            let len = norm(&raw);
            prop_assume!(len > 1e-3);
            let axis = unit_axis(raw.iter().map(|v| v / len).collect());
            let z = LatentVector::new(z).unwrap();
            let moved = shift(&z, &axis, n).unwrap();
            let disp: Vec<f64> = moved.as_slice().iter().zip(z.as_slice()).map(|(a, b)| a - b).collect();
            prop_assert!((norm(&disp) - n.abs()).abs() < 1e-9);
        }

        #[test]
        fn shift_multi_is_order_free(seed in 0u64..100) {
            let zs = sample_gaussian_latents::<f64>(4, 5, seed).unwrap();
            let axes: Vec<_> = zs[1..].iter().map(|v| unit_axis(v.as_slice().iter().map(|x| x / v.norm()).collect())).collect();
            let ns = [0.5, -1.25, 2.0];
            let fwd = shift_multi(&zs[0], &axes, &ns).unwrap();
            let rev_axes: Vec<_> = axes.iter().rev().cloned().collect();
            let rev_ns: Vec<f64> = ns.iter().rev().copied().collect();
            let rev = shift_multi(&zs[0], &rev_axes, &rev_ns).unwrap();
            for (a, b) in fwd.as_slice().iter().zip(rev.as_slice()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
