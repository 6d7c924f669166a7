use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};

use super::arch::{Activation, ArchSpec, Layer, LEAKY_SLOPE};
use super::train::TrainConfig;
use crate::numerics::{check_dim, LatentVector, SeededRng};
use crate::{Error, Result, Scalar};

/// Weights (`outputs × inputs`) and bias of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

/// Per-layer gradients, same shapes as the parameters.
pub type Gradients<T> = Vec<DenseParams<T>>;

#[derive(Debug, Clone, PartialEq)]
pub struct ShifterModel<T> {
    pub spec: ArchSpec,
    pub params: Vec<DenseParams<T>>,
    /// Training settings, when the model came out of [`super::train`].
    pub trained_with: Option<TrainConfig>,
}

enum Cache<T> {
    Dense { input: Array2<T>, pre: Array2<T>, activation: Activation },
    Dropout { mask: Array2<T> },
}

pub(crate) struct Tape<T> {
    caches: Vec<Cache<T>>,
}

fn activate<T: Scalar>(x: T, act: Activation) -> T {
    match act {
        Activation::None => x,
        Activation::Relu => x.max(T::zero()),
        Activation::LeakyRelu => {
            if x > T::zero() { x } else { T::of(LEAKY_SLOPE) * x }
        }
    }
}

fn activation_slope<T: Scalar>(x: T, act: Activation) -> T {
    match act {
        Activation::None => T::one(),
        Activation::Relu => {
            if x > T::zero() { T::one() } else { T::zero() }
        }
        Activation::LeakyRelu => {
            if x > T::zero() { T::one() } else { T::of(LEAKY_SLOPE) }
        }
    }
}

impl<T: Scalar> ShifterModel<T> {
    /// Fan-in scaled uniform initialization, `U(−1/√fan_in, 1/√fan_in)`.
    pub fn init(spec: ArchSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = SeededRng::seed_from_u64(seed);
        let params = spec
            .dense_layers()
            .map(|(inputs, outputs, _)| {
                let bound = 1.0 / (inputs as f64).sqrt();
                let mut draw = || T::of(rng.gen_range(-bound..bound));
                let weight = Array2::from_shape_simple_fn((outputs, inputs), &mut draw);
                let bias = Array1::from_shape_simple_fn(outputs, &mut draw);
                DenseParams { weight, bias }
            })
            .collect();
        Ok(Self { spec, params, trained_with: None })
    }

    /// All-zero weights and biases.
    pub fn zeros(spec: ArchSpec) -> Result<Self> {
        spec.validate()?;
        let params = spec
            .dense_layers()
            .map(|(i, o, _)| DenseParams { weight: Array2::zeros((o, i)), bias: Array1::zeros(o) })
            .collect();
        Ok(Self { spec, params, trained_with: None })
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.weight.len() + p.bias.len()).sum()
    }

    /// Builds the `n × (d + k)` network input.
    pub fn assemble_input(&self, latents: ArrayView2<'_, T>, labels: ArrayView2<'_, T>) -> Result<Array2<T>> {
        check_dim(self.d(), latents.ncols())?;
        check_dim(self.k(), labels.ncols())?;
        check_dim(latents.nrows(), labels.nrows())?;
        Ok(ndarray::concatenate![Axis(1), latents, labels])
    }

    /// Batched forward pass over rows of `x` (`n × (d + k)`).
    ///
    /// Dropout is applied only when `dropout_rng` is given, with inverted
    /// scaling so the inference path needs no correction.
    pub(crate) fn forward_tape(&self, x: Array2<T>, mut dropout_rng: Option<&mut SeededRng>, keep_tape: bool) -> (Array2<T>, Tape<T>) {
        let mut caches = Vec::new();
        let mut h = x;
        let mut dense = self.params.iter();
        for layer in &self.spec.layers {
            match *layer {
                Layer::Dense { activation, .. } => {
                    let p = dense.next().expect("params match spec");
                    let mut pre = h.dot(&p.weight.t());
                    pre += &p.bias;
                    let out = pre.mapv(|v| activate(v, activation));
                    if keep_tape {
                        caches.push(Cache::Dense { input: h, pre, activation });
                    }
                    h = out;
                }
                Layer::Dropout { rate } => {
                    let Some(rng) = dropout_rng.as_deref_mut() else { continue };
                    let keep = 1.0 - rate;
                    let scale = T::of(1.0 / keep);
                    let mask = h.mapv(|_| if rng.gen::<f64>() < keep { scale } else { T::zero() });
                    h *= &mask;
                    if keep_tape {
                        caches.push(Cache::Dropout { mask });
                    }
                }
            }
        }
        (h, Tape { caches })
    }

    /// Backpropagates `d_out` (gradient of the loss w.r.t. the output).
    pub(crate) fn backward(&self, tape: Tape<T>, d_out: Array2<T>) -> Gradients<T> {
        let mut grads = Vec::with_capacity(self.params.len());
        let mut delta = d_out;
        let mut dense_idx = self.params.len();
        for cache in tape.caches.into_iter().rev() {
            match cache {
                Cache::Dropout { mask } => delta *= &mask,
                Cache::Dense { input, pre, activation } => {
                    dense_idx -= 1;
                    if activation != Activation::None {
                        Zip::from(&mut delta).and(&pre).for_each(|d, &z| *d *= activation_slope(z, activation));
                    }
                    let p = &self.params[dense_idx];
                    let weight = delta.t().dot(&input);
                    let bias = delta.sum_axis(Axis(0));
                    if dense_idx > 0 {
                        delta = delta.dot(&p.weight);
                    }
                    grads.push(DenseParams { weight, bias });
                }
            }
        }
        grads.reverse();
        grads
    }

    /// Inference (`training_mode = false`) or stochastic forward for one latent.
    ///
    /// `seed` drives the dropout masks and is ignored at inference.
    pub fn forward(&self, z: &LatentVector<T>, label: &[T], training_mode: bool, seed: u64) -> Result<LatentVector<T>> {
        check_dim(self.d(), z.dim())?;
        check_dim(self.k(), label.len())?;
        let mut row = z.as_slice().to_vec();
        row.extend_from_slice(label);
        let x = Array2::from_shape_vec((1, row.len()), row).expect("row shape");
        let mut rng = SeededRng::seed_from_u64(seed);
        let (out, _) = self.forward_tape(x, training_mode.then_some(&mut rng), false);
        LatentVector::new(out.into_raw_vec_and_offset().0)
            .map_err(|_| Error::DegenerateInput("shifter produced a non-finite output".into()))
    }

    /// Inference over many latents sharing one label vector.
    pub fn forward_batch(&self, latents: ArrayView2<'_, T>, label: &[T]) -> Result<Array2<T>> {
        check_dim(self.k(), label.len())?;
        let labels = Array2::from_shape_fn((latents.nrows(), self.k()), |(_, j)| label[j]);
        let x = self.assemble_input(latents, labels.view())?;
        Ok(self.forward_tape(x, None, false).0)
    }

    /// Inference on an already assembled `n × (d + k)` input.
    pub fn predict(&self, x: Array2<T>) -> Result<Array2<T>> {
        check_dim(self.d() + self.k(), x.ncols())?;
        Ok(self.forward_tape(x, None, false).0)
    }

    /// Mean squared error over all entries, and its gradient.
    pub fn loss_and_gradients(&self, x: Array2<T>, target: ArrayView2<'_, T>, dropout_rng: Option<&mut SeededRng>) -> (T, Gradients<T>) {
        let (out, tape) = self.forward_tape(x, dropout_rng, true);
        let count = T::of(out.len() as f64);
        let diff = out - target;
        let loss = diff.iter().map(|&v| v * v).sum::<T>() / count;
        let d_out = diff * (T::of(2.0) / count);
        (loss, self.backward(tape, d_out))
    }

    /// Parameters flattened layer by layer (weights row-major, then bias).
    pub fn flat_params(&self) -> Vec<T> {
        flatten(&self.params)
    }

    pub fn set_flat_params(&mut self, flat: &[T]) -> Result<()> {
        check_dim(self.param_count(), flat.len())?;
        let mut it = flat.iter().copied();
        for p in &mut self.params {
            p.weight.iter_mut().chain(p.bias.iter_mut()).for_each(|v| *v = it.next().expect("length checked"));
        }
        Ok(())
    }
}

/// Flattens gradients in the same order as [`ShifterModel::flat_params`].
pub fn flatten<T: Scalar>(params: &[DenseParams<T>]) -> Vec<T> {
    params.iter().flat_map(|p| p.weight.iter().chain(p.bias.iter()).copied()).collect()
}

/// Applies `models` left to right with inference forwards.
pub fn chain_shift<T: Scalar>(z: &LatentVector<T>, models: &[ShifterModel<T>], labels: &[Vec<T>]) -> Result<LatentVector<T>> {
    if models.len() != labels.len() {
        return Err(Error::invalid(format!("{} models but {} labels", models.len(), labels.len())));
    }
    models
        .iter()
        .zip(labels)
        .try_fold(z.clone(), |acc, (m, label)| m.forward(&acc, label, false, 0))
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;
    use crate::numerics::{finite_diff_gradient, sample_gaussian_latents, stack_latents};
    use crate::shifter::{build_arch, ArchName};

    #[test]
    fn zero_model_outputs_zero() {
        let m = ShifterModel::<f64>::zeros(build_arch(ArchName::C, 6, 1).unwrap()).unwrap();
        let z = LatentVector::new(vec![1.0, -2.0, 3.0, 0.5, 0.1, 9.0]).unwrap();
        assert_eq!(m.forward(&z, &[1.0], false, 0).unwrap(), LatentVector::zeros(6));
    }

    #[test]
    fn inference_is_deterministic() {
        let m = ShifterModel::<f64>::init(build_arch(ArchName::E, 8, 1).unwrap(), 3).unwrap();
        let z = sample_gaussian_latents(1, 8, 1).unwrap().remove(0);
        assert_eq!(m.forward(&z, &[1.0], false, 1).unwrap(), m.forward(&z, &[1.0], false, 2).unwrap());
        // Training mode draws masks from the seed.
        assert_eq!(m.forward(&z, &[1.0], true, 5).unwrap(), m.forward(&z, &[1.0], true, 5).unwrap());
        assert_ne!(m.forward(&z, &[1.0], true, 5).unwrap(), m.forward(&z, &[1.0], false, 5).unwrap());
    }

    #[test]
    fn hand_computed_single_layer() {
        // d = 2, k = 1, one dense layer 3 → 2 without activation.
        let spec = ArchSpec::mlp("toy", 2, 1, &[], None).unwrap();
        let mut m = ShifterModel::<f64>::zeros(spec).unwrap();
        m.params[0].weight = array![[1.0, 0.0, 0.5], [0.0, 1.0, -0.25]];
        m.params[0].bias = array![0.1, -0.2];
        let out = m.forward(&LatentVector::new(vec![0.3, 0.7]).unwrap(), &[1.0], false, 0).unwrap();
        let want = [0.3 + 0.5 + 0.1, 0.7 - 0.25 - 0.2];
        for (o, w) in out.as_slice().iter().zip(want) {
            assert!((o - w).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_computed_hidden_layer() {
        let spec = ArchSpec::mlp("toy", 1, 1, &[(2, Activation::LeakyRelu)], None).unwrap();
        let mut m = ShifterModel::<f64>::zeros(spec).unwrap();
        m.params[0].weight = array![[1.0, 1.0], [-2.0, 0.0]];
        m.params[0].bias = array![0.0, 0.5];
        m.params[1].weight = array![[1.0, 3.0]];
        m.params[1].bias = array![0.25];
        // x = (2, 1): hidden pre = (3, -3.5) → (3, -0.035); out = 3 - 0.105 + 0.25.
        let out = m.forward(&LatentVector::new(vec![2.0]).unwrap(), &[1.0], false, 0).unwrap();
        assert!((out.as_slice()[0] - 3.145).abs() < 1e-12);
    }

    #[test]
    fn dimension_checks() {
        let m = ShifterModel::<f64>::init(build_arch(ArchName::B, 4, 1).unwrap(), 0).unwrap();
        assert!(m.forward(&LatentVector::zeros(3), &[1.0], false, 0).is_err());
        assert!(m.forward(&LatentVector::zeros(4), &[1.0, 0.0], false, 0).is_err());
    }

    #[test]
    fn chain_identity_and_reduction() {
        let z = LatentVector::new(vec![0.5, -0.5, 1.0]).unwrap();
        assert_eq!(chain_shift::<f64>(&z, &[], &[]).unwrap(), z);
        let m = ShifterModel::<f64>::init(build_arch(ArchName::A, 3, 1).unwrap(), 1).unwrap();
        assert_eq!(chain_shift(&z, std::slice::from_ref(&m), &[vec![1.0]]).unwrap(), m.forward(&z, &[1.0], false, 0).unwrap());
        assert!(chain_shift(&z, &[m], &[]).is_err());
    }

    #[test]
    fn backprop_matches_finite_differences_on_two_layer_net() {
        let spec = ArchSpec::mlp("toy", 3, 1, &[(5, Activation::Relu)], None).unwrap();
        let model = ShifterModel::<f64>::init(spec, 7).unwrap();
        let z = stack_latents(&sample_gaussian_latents(1, 3, 8).unwrap()).unwrap();
        let target = stack_latents(&sample_gaussian_latents(1, 3, 9).unwrap()).unwrap();
        let x = model.assemble_input(z.view(), array![[1.0]].view()).unwrap();
        let (_, grads) = model.loss_and_gradients(x.clone(), target.view(), None);
        let numeric = finite_diff_gradient(
            |theta: &[f64]| {
                let mut probe = model.clone();
                probe.set_flat_params(theta)?;
                Ok(probe.loss_and_gradients(x.clone(), target.view(), None).0)
            },
            &model.flat_params(),
            1e-6,
        )
        .unwrap();
        for (a, n) in flatten(&grads).iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            assert!(rel <= 1e-4, "{a} vs {n}");
        }
    }
}
