#![allow(dead_code)]

use latent_shift::axis::{fit_feature_axis, FeatureAxis, DEFAULT_EPSILON};
use latent_shift::numerics::{sample_gaussian_latents, stage_seed};
use latent_shift::pairs::{
    build_pair_tuples, expand_tuples, split_dataset, BuildDiagnostics, FourthPair, Provenance, Split,
    DEFAULT_FRACTIONS,
};
use latent_shift::shifter::{build_arch, train, ArchName, ShifterModel, TrainConfig, TrainHistory};
use latent_shift::world::{score_batch, FeatureScorer};

pub const D: usize = 32;
pub const N_FIT: usize = 10_000;
pub const N_CANDIDATES: usize = 8_000;

pub struct Trained {
    pub axis: FeatureAxis<f64>,
    pub diagnostics: BuildDiagnostics,
    pub split: Split,
    pub model: ShifterModel<f64>,
    pub history: TrainHistory,
}

pub fn fit_axis<S: FeatureScorer>(scorer: &S, j: usize, seed: u64) -> FeatureAxis<f64> {
    let zs = sample_gaussian_latents(N_FIT, scorer.dim(), stage_seed(seed, "fit")).unwrap();
    let scores = score_batch(scorer, &zs).unwrap().column(j).to_vec();
    fit_feature_axis(&scorer.feature_names()[j], &zs, &scores, true, DEFAULT_EPSILON).unwrap()
}

/// Axis fit, pairs build (multiplier 1, threshold 0.5), 80/10/10 split and
/// training of architecture a.
pub fn run_feature<S: FeatureScorer>(scorer: &S, j: usize, seed: u64, cfg: &TrainConfig) -> Trained {
    let axis = fit_axis(scorer, j, seed);
    let pair_seed = stage_seed(seed, "pairs");
    let build = build_pair_tuples(scorer, &axis, j, N_CANDIDATES, 0.5, 1.0, pair_seed).unwrap();
    let provenance = Provenance { threshold: 0.5, multiplier: 1.0, seed: pair_seed, axis_fingerprint: axis.fingerprint() };
    let ds = expand_tuples(&build.tuples, provenance, FourthPair::Removal).unwrap();
    let split = split_dataset(&ds, DEFAULT_FRACTIONS, stage_seed(seed, "split")).unwrap();
    let spec = build_arch(ArchName::A, scorer.dim(), 1).unwrap();
    let cfg = TrainConfig { seed: stage_seed(seed, "train"), ..cfg.clone() };
    let (model, history) = train::<f64>(&split.train, &split.valid, &spec, &cfg).unwrap();
    Trained { axis, diagnostics: build.diagnostics, split, model, history }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}
