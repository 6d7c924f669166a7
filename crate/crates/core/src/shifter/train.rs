use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::arch::ArchSpec;
use super::network::ShifterModel;
use crate::numerics::{mae, mse, r2, stage_seed, SeededRng};
use crate::pairs::PairSample;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Ten epochs of Adam at learning rate 1e-5 on mini-batches of 16.
    fn default() -> Self {
        Self { learning_rate: 1e-5, epochs: 10, batch_size: 16, adam_beta1: 0.9, adam_beta2: 0.999, adam_eps: 1e-8, seed: 0 }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.adam_beta1, beta2: self.adam_beta2, eps: self.adam_eps }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be finite and non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

/// Per-epoch average losses; `initial_valid_loss` is measured before the
/// first update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub initial_valid_loss: f64,
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = format!("epoch,train_loss,valid_loss\n0,,{}\n", self.initial_valid_loss);
        for (i, (t, v)) in self.train_loss.iter().zip(&self.valid_loss).enumerate() {
            out.push_str(&format!("{},{t},{v}\n", i + 1));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
}

/// Inputs (`n × (d + k)`) and targets (`n × d`) for `samples`.
pub(crate) fn design<T: Scalar>(samples: &[PairSample], d: usize, k: usize) -> Result<(Array2<T>, Array2<T>)> {
    let mut x = Array2::zeros((samples.len(), d + k));
    let mut y = Array2::zeros((samples.len(), d));
    for (i, s) in samples.iter().enumerate() {
        if s.input.dim() != d || s.target.dim() != d {
            return Err(Error::invalid(format!("sample {i} has dimension {}, model expects {d}", s.input.dim())));
        }
        for j in 0..d {
            x[[i, j]] = T::of(s.input.as_slice()[j]);
            y[[i, j]] = T::of(s.target.as_slice()[j]);
        }
        for j in 0..k {
            x[[i, d + j]] = T::of(f64::from(s.label));
        }
    }
    Ok((x, y))
}

fn select_rows<T: Scalar>(m: &Array2<T>, rows: &[usize]) -> Array2<T> {
    m.select(ndarray::Axis(0), rows)
}

fn batched_mse<T: Scalar>(model: &ShifterModel<T>, x: &Array2<T>, y: &Array2<T>) -> f64 {
    let pred = model.forward_tape(x.clone(), None, false).0;
    let total: T = pred.iter().zip(y.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
    total.f64() / y.len() as f64
}

/// Trains a freshly initialized model of shape `spec`.
///
/// Each epoch reshuffles the training samples; the last short batch is
/// kept. The loss is the mean over batch rows and output coordinates.
pub fn train<T: Scalar>(
    train_set: &[PairSample],
    valid_set: &[PairSample],
    spec: &ArchSpec,
    cfg: &TrainConfig,
) -> Result<(ShifterModel<T>, TrainHistory)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset("training set is empty".into()));
    }
    if valid_set.is_empty() {
        return Err(Error::EmptyDataset("validation set is empty".into()));
    }
    let mut model = ShifterModel::<T>::init(spec.clone(), stage_seed(cfg.seed, "init"))?;
    let (x, y) = design::<T>(train_set, spec.d, spec.k)?;
    let (vx, vy) = design::<T>(valid_set, spec.d, spec.k)?;

    let mut shuffle_rng = SeededRng::seed_from_u64(stage_seed(cfg.seed, "shuffle"));
    let mut dropout_rng = SeededRng::seed_from_u64(stage_seed(cfg.seed, "dropout"));
    let mut adam = AdamState::new(&model.params);
    let adam_cfg = cfg.adam();

    let mut history = TrainHistory {
        initial_valid_loss: batched_mse(&model, &vx, &vy),
        train_loss: Vec::with_capacity(cfg.epochs),
        valid_loss: Vec::with_capacity(cfg.epochs),
    };
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_total = 0.0;
        for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
            let bx = select_rows(&x, rows);
            let by = select_rows(&y, rows);
            let (loss, grads) = model.loss_and_gradients(bx, by.view(), Some(&mut dropout_rng));
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch: epoch + 1, batch: batch + 1 });
            }
            epoch_total += loss.f64() * rows.len() as f64;
            adam.update(&mut model.params, &grads, &adam_cfg);
        }
        history.train_loss.push(epoch_total / train_set.len() as f64);
        let valid = batched_mse(&model, &vx, &vy);
        if !valid.is_finite() {
            return Err(Error::TrainingDiverged { epoch: epoch + 1, batch: order.len().div_ceil(cfg.batch_size) });
        }
        history.valid_loss.push(valid);
    }
    model.trained_with = Some(cfg.clone());
    Ok((model, history))
}

/// MSE, MAE and r² over all entries of the predictions on `test_set`.
pub fn evaluate_metrics<T: Scalar>(model: &ShifterModel<T>, test_set: &[PairSample]) -> Result<Metrics> {
    if test_set.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty test set"));
    }
    let (x, y) = design::<T>(test_set, model.d(), model.k())?;
    let pred = model.predict(x)?;
    let pred: Vec<f64> = pred.iter().map(|v| v.f64()).collect();
    let target: Vec<f64> = y.iter().map(|v| v.f64()).collect();
    Ok(Metrics { mse: mse(&target, &pred)?, mae: mae(&target, &pred)?, r2: r2(&target, &pred)? })
}
