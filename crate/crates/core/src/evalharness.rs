//! Threshold-count A/B evaluation.
//!
//! A latent population is scored as-is, after the axis baseline and after
//! the shifter; for every feature of the scorer the harness counts members
//! whose score is strictly above the threshold.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::axis::{shift_multi, FeatureAxis};
use crate::numerics::{sample_gaussian_latents, stack_latents, unstack_latents};
use crate::shifter::ShifterModel;
use crate::world::{score_batch, FeatureScorer};
use crate::{Error, Latent, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_samples: usize,
    pub threshold: f64,
    /// Feature names to add, in order.
    pub features: Vec<String>,
    /// Baseline multipliers, one per added feature; empty means 1.0 each.
    pub multipliers: Vec<f64>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { n_samples: 1000, threshold: 0.5, features: Vec::new(), multipliers: Vec::new(), seed: 0 }
    }
}

impl EvalConfig {
    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("evaluation needs at least one sample"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        Ok(())
    }

    fn multipliers_for(&self, n: usize) -> Result<Vec<f64>> {
        match self.multipliers.len() {
            0 => Ok(vec![1.0; n]),
            len if len == n => Ok(self.multipliers.clone()),
            len => Err(Error::invalid(format!("{len} multipliers for {n} features"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub count: usize,
    pub mean_score: f64,
}

/// Counts for one tracked feature across the three populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCounts {
    pub feature: String,
    pub original: PopulationStats,
    pub baseline: PopulationStats,
    pub lfs: PopulationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    pub threshold: f64,
    pub seed: u64,
    pub added: Vec<String>,
    pub multipliers: Vec<f64>,
    pub features: Vec<FeatureCounts>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn counts(&self, feature: &str) -> Option<&FeatureCounts> {
        self.features.iter().find(|f| f.feature == feature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::invalid(format!("unknown report format '{s}'"))),
        }
    }
}

/// `|{i : scores[i][j] > threshold}|` and the mean score for every column.
fn population_stats(scores: &Matrix, threshold: f64) -> Vec<PopulationStats> {
    scores
        .columns()
        .into_iter()
        .map(|col| PopulationStats {
            count: col.iter().filter(|&&p| p > threshold).count(),
            mean_score: col.mean().unwrap_or(0.0),
        })
        .collect()
}

fn assemble<S: FeatureScorer + ?Sized>(
    scorer: &S,
    cfg: &EvalConfig,
    added: Vec<String>,
    multipliers: Vec<f64>,
    original: &[Latent],
    baseline: &[Latent],
    lfs: &[Latent],
) -> Result<EvalReport> {
    let o = population_stats(&score_batch(scorer, original)?, cfg.threshold);
    let b = population_stats(&score_batch(scorer, baseline)?, cfg.threshold);
    let l = population_stats(&score_batch(scorer, lfs)?, cfg.threshold);
    let features = scorer
        .feature_names()
        .into_iter()
        .zip(o.into_iter().zip(b).zip(l))
        .map(|(feature, ((original, baseline), lfs))| FeatureCounts { feature, original, baseline, lfs })
        .collect();
    Ok(EvalReport {
        n_samples: cfg.n_samples,
        threshold: cfg.threshold,
        seed: cfg.seed,
        added,
        multipliers,
        features,
        notes: Vec::new(),
    })
}

/// Baseline `z + n·axis` against `forward(model, z, 1)` for one feature.
pub fn run_single_feature_eval<S: FeatureScorer + ?Sized>(
    scorer: &S,
    axis: &FeatureAxis<f64>,
    model: &ShifterModel<f64>,
    feature_index: usize,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let names = scorer.feature_names();
    let name = names
        .get(feature_index)
        .ok_or_else(|| Error::invalid(format!("feature index {feature_index} out of range")))?;
    let single = EvalConfig { features: vec![name.clone()], ..cfg.clone() };
    run_multi_feature_eval(scorer, std::slice::from_ref(axis), std::slice::from_ref(model), &[feature_index], &single)
}

/// Summed axis shifts against the chained shifters, label 1 for every model.
pub fn run_multi_feature_eval<S: FeatureScorer + ?Sized>(
    scorer: &S,
    axes: &[FeatureAxis<f64>],
    models: &[ShifterModel<f64>],
    feature_indices: &[usize],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    if axes.len() != models.len() || axes.len() != feature_indices.len() {
        return Err(Error::invalid(format!(
            "{} axes, {} models and {} feature indices",
            axes.len(),
            models.len(),
            feature_indices.len()
        )));
    }
    let names = scorer.feature_names();
    let added = feature_indices
        .iter()
        .map(|&j| names.get(j).cloned().ok_or_else(|| Error::invalid(format!("feature index {j} out of range"))))
        .collect::<Result<Vec<_>>>()?;
    let multipliers = cfg.multipliers_for(axes.len())?;
    for m in models {
        if m.d() != scorer.dim() {
            return Err(Error::invalid(format!("model dimension {} does not match scorer {}", m.d(), scorer.dim())));
        }
    }

    let original = sample_gaussian_latents::<f64>(cfg.n_samples, scorer.dim(), cfg.seed)?;
    let baseline = original
        .iter()
        .map(|z| shift_multi(z, axes, &multipliers))
        .collect::<Result<Vec<_>>>()?;
    let lfs = if models.is_empty() {
        original.clone()
    } else {
        // Whole population per model keeps this a batched pass.
        let mut batch = stack_latents(&original)?;
        for m in models {
            batch = m.forward_batch(batch.view(), &vec![1.0; m.k()])?;
        }
        unstack_latents(&batch).map_err(|_| Error::DegenerateInput("shifter produced a non-finite latent".into()))?
    };
    assemble(scorer, cfg, added, multipliers, &original, &baseline, &lfs)
}

/// Table-shaped CSV: one row per tracked feature, one count column per approach.
pub fn render_csv(report: &EvalReport) -> String {
    let mut out = String::from("feature,original,baseline,lfs\n");
    for f in &report.features {
        let _ = writeln!(out, "{},{},{},{}", f.feature, f.original.count, f.baseline.count, f.lfs.count);
    }
    out
}

pub fn render_json(report: &EvalReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn write_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => render_json(report)?,
    };
    fs::write(path, text)?;
    Ok(())
}

/// `eval-<feature+feature>-seed<seed>.<ext>`; `original` when nothing is added.
pub fn report_file_name(report: &EvalReport, format: ReportFormat) -> PathBuf {
    let features = if report.added.is_empty() { "original".to_string() } else { report.added.join("+") };
    PathBuf::from(format!("eval-{features}-seed{}.{}", report.seed, format.extension()))
}
