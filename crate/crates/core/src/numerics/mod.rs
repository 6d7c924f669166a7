//! Seeded sampling, least squares, regression metrics and a finite
//! difference gradient used as a test oracle.

mod gradcheck;
mod metrics;
mod ols;
mod random;

pub use gradcheck::finite_diff_gradient;
pub use metrics::{mae, mse, r2};
pub use ols::{cholesky_solve, ols_fit, RegressionFit};
pub use random::{sample_gaussian_latents, stage_seed, Gaussian, SeededRng};

use ndarray::{Array2, ArrayView1};

use crate::{Error, Result, Scalar};

/// Dense row-major matrix.
pub type DenseMatrix<T> = Array2<T>;

/// A point in the latent space of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector<T>(Vec<T>);

impl<T: Scalar> LatentVector<T> {
    /// Wraps `components`, rejecting empty or non-finite input.
    pub fn new(components: Vec<T>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("latent vector must have at least one component"));
        }
        if let Some(i) = components.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("latent component {i} is not finite")));
        }
        Ok(Self(components))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![T::zero(); d])
    }

    /// Unit basis vector `e_i` of length `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![T::zero(); d];
        v[i] = T::one();
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, T> {
        ArrayView1::from(&self.0[..])
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn dot(&self, other: &[T]) -> T {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> T {
        norm(&self.0)
    }

    /// `self + scale * direction`.
    pub fn add_scaled(&self, direction: &[T], scale: T) -> Result<Self> {
        check_dim(self.dim(), direction.len())?;
        Ok(Self(
            self.0.iter().zip(direction).map(|(&z, &a)| z + scale * a).collect(),
        ))
    }

    pub fn cast<U: Scalar>(&self) -> LatentVector<U> {
        LatentVector(self.0.iter().map(|v| U::of(v.f64())).collect())
    }
}

impl<T> AsRef<[T]> for LatentVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::invalid(format!("dimension mismatch: expected {expected}, got {got}")));
    }
    Ok(())
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let denom = norm(a) * norm(b);
    if denom == T::zero() {
        T::zero()
    } else {
        dot(a, b) / denom
    }
}

/// Stacks latents into an `n × d` matrix.
pub fn stack_latents<T: Scalar>(latents: &[LatentVector<T>]) -> Result<DenseMatrix<T>> {
    let d = latents.first().map(LatentVector::dim).unwrap_or(0);
    let mut out = Array2::zeros((latents.len(), d));
    for (mut row, z) in out.rows_mut().into_iter().zip(latents) {
        check_dim(d, z.dim())?;
        row.assign(&z.view());
    }
    Ok(out)
}

/// Splits an `n × d` matrix into latents.
pub fn unstack_latents<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<LatentVector<T>>> {
    m.rows().into_iter().map(|r| LatentVector::new(r.to_vec())).collect()
}
