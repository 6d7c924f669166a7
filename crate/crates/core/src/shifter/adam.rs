use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::network::DenseParams;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-5, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One Adam update with bias correction; `t` counts steps from 1.
pub fn adam_step<T: Scalar>(params: &mut [T], grads: &[T], m: &mut [T], v: &mut [T], t: u64, cfg: &AdamConfig) {
    assert!(params.len() == grads.len() && m.len() == params.len() && v.len() == params.len(), "adam shapes differ");
    let c = Coefficients::new(t, cfg);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        c.apply(p, g, m, v);
    }
}

#[derive(Clone, Copy)]
struct Coefficients<T> {
    b1: T,
    b2: T,
    one_minus_b1: T,
    one_minus_b2: T,
    correction1: T,
    correction2: T,
    lr: T,
    eps: T,
}

impl<T: Scalar> Coefficients<T> {
    fn new(t: u64, cfg: &AdamConfig) -> Self {
        let t = t.max(1) as i32;
        Self {
            b1: T::of(cfg.beta1),
            b2: T::of(cfg.beta2),
            one_minus_b1: T::of(1.0 - cfg.beta1),
            one_minus_b2: T::of(1.0 - cfg.beta2),
            correction1: T::of(1.0 - cfg.beta1.powi(t)),
            correction2: T::of(1.0 - cfg.beta2.powi(t)),
            lr: T::of(cfg.learning_rate),
            eps: T::of(cfg.eps),
        }
    }

    #[inline]
    fn apply(&self, p: &mut T, g: T, m: &mut T, v: &mut T) {
        *m = self.b1 * *m + self.one_minus_b1 * g;
        *v = self.b2 * *v + self.one_minus_b2 * g * g;
        let m_hat = *m / self.correction1;
        let v_hat = *v / self.correction2;
        *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
    }
}

/// First and second moment estimates for every dense layer.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    m: Vec<DenseParams<T>>,
    v: Vec<DenseParams<T>>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[DenseParams<T>]) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|p| DenseParams { weight: Array2::zeros(p.weight.dim()), bias: Array1::zeros(p.bias.len()) })
                .collect::<Vec<_>>()
        };
        Self { m: zeros(), v: zeros(), t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn update(&mut self, params: &mut [DenseParams<T>], grads: &[DenseParams<T>], cfg: &AdamConfig) {
        self.t += 1;
        let c = Coefficients::new(self.t, cfg);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(&mut p.weight).and(&g.weight).and(&mut m.weight).and(&mut v.weight).for_each(|p, &g, m, v| c.apply(p, g, m, v));
            Zip::from(&mut p.bias).and(&g.bias).and(&mut m.bias).and(&mut v.bias).for_each(|p, &g, m, v| c.apply(p, g, m, v));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64) -> AdamConfig {
        AdamConfig { learning_rate: lr, ..Default::default() }
    }

    #[test]
    fn first_step_by_hand() {
        let (mut p, mut m, mut v) = ([0.0f64], [0.0], [0.0]);
        adam_step(&mut p, &[1.0], &mut m, &mut v, 1, &cfg(0.1));
        // m̂ = 1, v̂ = 1 after bias correction.
        assert!((p[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
        assert!((p[0] + 0.099999999).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_never_moves() {
        let (mut p, mut m, mut v) = ([0.7f64, -1.2], [0.0; 2], [0.0; 2]);
        for t in 1..=50 {
            adam_step(&mut p, &[0.0, 0.0], &mut m, &mut v, t, &cfg(0.1));
        }
        assert_eq!(p, [0.7, -1.2]);
    }

    #[test]
    fn constant_gradient_steps_do_not_grow() {
        let (mut p, mut m, mut v) = ([0.0f64], [0.0], [0.0]);
        adam_step(&mut p, &[0.3], &mut m, &mut v, 1, &cfg(0.01));
        let d1 = p[0];
        adam_step(&mut p, &[0.3], &mut m, &mut v, 2, &cfg(0.01));
        let d2 = p[0] - d1;
        assert!(d2.abs() <= d1.abs() + 1e-12);
    }

    #[test]
    fn state_update_matches_slice_update() {
        let params = vec![DenseParams { weight: Array2::from_elem((2, 2), 0.5f64), bias: Array1::from_elem(2, -0.5) }];
        let grads = vec![DenseParams { weight: Array2::from_elem((2, 2), 0.2), bias: Array1::from_elem(2, -0.1) }];
        let mut p = params.clone();
        let mut state = AdamState::new(&p);
        state.update(&mut p, &grads, &cfg(0.01));
        state.update(&mut p, &grads, &cfg(0.01));
        let (mut w, mut m, mut v) = ([0.5f64], [0.0], [0.0]);
        adam_step(&mut w, &[0.2], &mut m, &mut v, 1, &cfg(0.01));
        adam_step(&mut w, &[0.2], &mut m, &mut v, 2, &cfg(0.01));
        assert_eq!(p[0].weight[[1, 0]], w[0]);
        assert_eq!(state.steps(), 2);
    }
}
