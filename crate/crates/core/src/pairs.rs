//! Shifted-pairs dataset construction.
//!
//! Candidate latents without a feature are shifted along its axis; a pair
//! is kept only when the scorer confirms the shifted latent has the
//! feature. Every pair then yields four `(input, label) → target` samples.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::axis::{shift, FeatureAxis};
use crate::numerics::{check_dim, sample_gaussian_latents, LatentVector, SeededRng};
use crate::world::{score_batch, FeatureScorer};
use crate::{npy, Error, Latent, Result};

const FORMAT_TAG: &str = "latent-shift/pairs-v1";
const BATCH: usize = 4096;

/// A latent without the feature and its shifted counterpart with it.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTuple {
    pub z_minus: Latent,
    pub z_plus: Latent,
    pub feature_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub input: Latent,
    /// 1 asks for the feature, 0 for its absence.
    pub label: u8,
    pub target: Latent,
}

/// Target for the `(z_plus, label 0)` sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourthPair {
    /// `(z_plus, 0) → z_minus`: the shifter also learns to remove the feature.
    #[default]
    Removal,
    /// `(z_plus, 0) → z_plus`.
    Identity,
}

/// Provenance recorded alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub feature_name: String,
    pub d: usize,
    pub threshold: f64,
    pub multiplier: f64,
    pub tuple_count: usize,
    pub seed: u64,
    pub axis_fingerprint: String,
    #[serde(default)]
    pub fourth_pair: FourthPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairsDataset {
    pub meta: DatasetMeta,
    pub samples: Vec<PairSample>,
}

/// Acceptance counts at each filter stage of [`build_pair_tuples`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildDiagnostics {
    pub candidates: usize,
    pub negatives: usize,
    pub accepted: usize,
}

impl BuildDiagnostics {
    pub fn negative_rate(&self) -> f64 {
        ratio(self.negatives, self.candidates)
    }

    /// Fraction of negatives whose shift produced the feature.
    pub fn shift_success_rate(&self) -> f64 {
        ratio(self.accepted, self.negatives)
    }

    /// Accepted tuples per candidate.
    pub fn yield_rate(&self) -> f64 {
        ratio(self.accepted, self.candidates)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 { 0.0 } else { a as f64 / b as f64 }
}

#[derive(Debug, Clone)]
pub struct TupleBuild {
    pub tuples: Vec<PairTuple>,
    pub diagnostics: BuildDiagnostics,
}

/// Samples `n_candidates` latents and keeps the verified shifted pairs.
pub fn build_pair_tuples<S: FeatureScorer + ?Sized>(
    scorer: &S,
    axis: &FeatureAxis<f64>,
    feature_index: usize,
    n_candidates: usize,
    threshold: f64,
    multiplier: f64,
    seed: u64,
) -> Result<TupleBuild> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    if n_candidates == 0 {
        return Err(Error::invalid("need at least one candidate"));
    }
    if feature_index >= scorer.feature_count() {
        return Err(Error::invalid(format!("feature index {feature_index} out of range")));
    }
    check_dim(scorer.dim(), axis.dim())?;

    let candidates = sample_gaussian_latents::<f64>(n_candidates, scorer.dim(), seed)?;
    let mut diagnostics = BuildDiagnostics { candidates: n_candidates, ..Default::default() };
    let mut tuples = Vec::new();
    for chunk in candidates.chunks(BATCH) {
        let before = score_batch(scorer, chunk)?;
        let negatives: Vec<&Latent> = chunk
            .iter()
            .zip(before.column(feature_index))
            .filter(|(_, &s)| s < threshold)
            .map(|(z, _)| z)
            .collect();
        diagnostics.negatives += negatives.len();
        let shifted = negatives
            .iter()
            .map(|z| shift(z, axis, multiplier))
            .collect::<Result<Vec<_>>>()?;
        let after = score_batch(scorer, &shifted)?;
        for ((z_minus, z_plus), &s) in negatives.into_iter().zip(shifted).zip(after.column(feature_index)) {
            if s > threshold {
                tuples.push(PairTuple { z_minus: z_minus.clone(), z_plus, feature_name: axis.feature_name.clone() });
            }
        }
    }
    diagnostics.accepted = tuples.len();
    if tuples.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no tuples accepted: {} candidates, {} below threshold ({:.4}), {} confirmed after shift ({:.4})",
            diagnostics.candidates,
            diagnostics.negatives,
            diagnostics.negative_rate(),
            diagnostics.accepted,
            diagnostics.shift_success_rate(),
        )));
    }
    Ok(TupleBuild { tuples, diagnostics })
}

/// Provenance for [`expand_tuples`].
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub threshold: f64,
    pub multiplier: f64,
    pub seed: u64,
    pub axis_fingerprint: String,
}

/// Expands each tuple into four samples:
/// `(z−,1)→z+`, `(z+,1)→z+`, `(z−,0)→z−`, `(z+,0)→z−` (or `→z+` with
/// [`FourthPair::Identity`]).
pub fn expand_tuples(tuples: &[PairTuple], provenance: Provenance, fourth: FourthPair) -> Result<PairsDataset> {
    let first = tuples.first().ok_or_else(|| Error::EmptyDataset("no tuples to expand".into()))?;
    let d = first.z_minus.dim();
    let mut samples = Vec::with_capacity(4 * tuples.len());
    for t in tuples {
        check_dim(d, t.z_minus.dim())?;
        check_dim(d, t.z_plus.dim())?;
        if t.feature_name != first.feature_name {
            return Err(Error::invalid("tuples mix features"));
        }
        let removal_target = match fourth {
            FourthPair::Removal => &t.z_minus,
            FourthPair::Identity => &t.z_plus,
        };
        samples.push(PairSample { input: t.z_minus.clone(), label: 1, target: t.z_plus.clone() });
        samples.push(PairSample { input: t.z_plus.clone(), label: 1, target: t.z_plus.clone() });
        samples.push(PairSample { input: t.z_minus.clone(), label: 0, target: t.z_minus.clone() });
        samples.push(PairSample { input: t.z_plus.clone(), label: 0, target: removal_target.clone() });
    }
    Ok(PairsDataset {
        meta: DatasetMeta {
            feature_name: first.feature_name.clone(),
            d,
            threshold: provenance.threshold,
            multiplier: provenance.multiplier,
            tuple_count: tuples.len(),
            seed: provenance.seed,
            axis_fingerprint: provenance.axis_fingerprint,
            fourth_pair: fourth,
        },
        samples,
    })
}

/// Train / validation / test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<PairSample>,
    pub valid: Vec<PairSample>,
    pub test: Vec<PairSample>,
}

/// Seeded shuffle, then contiguous cuts of `⌊f₀n⌋`, `⌊f₁n⌋` and the remainder.
pub fn split_dataset(ds: &PairsDataset, fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split fractions must be in [0, 1] and sum to 1, got {fractions:?}")));
    }
    if ds.samples.is_empty() {
        return Err(Error::EmptyDataset("cannot split an empty dataset".into()));
    }
    let n = ds.samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeededRng::seed_from_u64(seed));
    let n_train = (a * n as f64).floor() as usize;
    let n_valid = ((b * n as f64).floor() as usize).min(n - n_train);
    let pick = |idx: &[usize]| idx.iter().map(|&i| ds.samples[i].clone()).collect::<Vec<_>>();
    Ok(Split {
        train: pick(&order[..n_train]),
        valid: pick(&order[n_train..n_train + n_valid]),
        test: pick(&order[n_train + n_valid..]),
    })
}

/// Default 80 / 10 / 10 split.
pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.8, 0.1, 0.1);

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    #[serde(flatten)]
    meta: DatasetMeta,
    files: ManifestFiles,
}

#[derive(Serialize, Deserialize)]
struct ManifestFiles {
    inputs: String,
    labels: String,
    targets: String,
}

impl PairsDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Writes `manifest.json`, `inputs.npy`, `labels.npy` and `targets.npy`
    /// into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let n = self.samples.len();
        let d = self.meta.d;
        let mut inputs = Array2::<f32>::zeros((n, d));
        let mut labels = Array2::<f32>::zeros((n, 1));
        let mut targets = Array2::<f32>::zeros((n, d));
        for (i, s) in self.samples.iter().enumerate() {
            for j in 0..d {
                inputs[[i, j]] = s.input.as_slice()[j] as f32;
                targets[[i, j]] = s.target.as_slice()[j] as f32;
            }
            labels[[i, 0]] = f32::from(s.label);
        }
        let files = ManifestFiles {
            inputs: "inputs.npy".into(),
            labels: "labels.npy".into(),
            targets: "targets.npy".into(),
        };
        npy::write(&dir.join(&files.inputs), inputs.view())?;
        npy::write(&dir.join(&files.labels), labels.view())?;
        npy::write(&dir.join(&files.targets), targets.view())?;
        let manifest = Manifest { format: FORMAT_TAG.into(), meta: self.meta.clone(), files };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::format(format!("dataset manifest: {e}")))?;
        if manifest.format != FORMAT_TAG {
            return Err(Error::format(format!("unknown dataset format '{}'", manifest.format)));
        }
        let meta = manifest.meta;
        let inputs = npy::read(&dir.join(&manifest.files.inputs))?;
        let labels = npy::read(&dir.join(&manifest.files.labels))?;
        let targets = npy::read(&dir.join(&manifest.files.targets))?;
        let n = 4 * meta.tuple_count;
        if inputs.dim() != (n, meta.d) || targets.dim() != (n, meta.d) || labels.dim() != (n, 1) {
            return Err(Error::format(format!(
                "dataset arrays {:?}/{:?}/{:?} disagree with manifest (n = {n}, d = {})",
                inputs.dim(),
                labels.dim(),
                targets.dim(),
                meta.d
            )));
        }
        let widen = |row: ndarray::ArrayView1<'_, f32>| {
            LatentVector::new(row.iter().map(|&v| f64::from(v)).collect())
                .map_err(|e| Error::format(format!("dataset value: {e}")))
        };
        let samples = (0..n)
            .map(|i| {
                let l = labels[[i, 0]];
                let label = if l == 0.0 {
                    0
                } else if l == 1.0 {
                    1
                } else {
                    return Err(Error::format(format!("label {l} at row {i} is not binary")));
                };
                Ok(PairSample { input: widen(inputs.row(i))?, label, target: widen(targets.row(i))? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { meta, samples })
    }
}
