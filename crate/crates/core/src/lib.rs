//! Latent feature shifting.
//!
//! Tools for steering a generative model's latent vectors toward (or away
//! from) a semantic feature:
//!
//! * [`axis`]: the regression baseline, a unit feature axis fitted by
//!   least squares on (latent, score) pairs,
//! * [`pairs`]: construction of the shifted-pairs training dataset,
//! * [`shifter`]: small MLPs trained from scratch to map
//!   `(latent, label)` to a shifted latent,
//! * [`evalharness`]: threshold-count A/B comparison of the two approaches.
//!
//! The generator and classifier are abstracted behind
//! [`world::FeatureScorer`]; [`world::SyntheticWorld`] is a closed-form
//! scorer with known ground truth and [`world::ExternalScorer`] bridges to
//! an out-of-process model over `.npy` files.
//!
//! The numeric core is generic over [`Scalar`] (`f32` / `f64`). The
//! aliases at the crate root fix it to `f64`, which is what the pipeline
//! uses internally; files are written at 32-bit precision.

// `!(x > y)` deliberately treats NaN as failing a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axis;
pub mod cli;
pub mod error;
pub mod evalharness;
pub mod npy;
pub mod numerics;
pub mod pairs;
pub mod scalar;
pub mod shifter;
pub mod world;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// A latent vector in 64-bit precision.
pub type Latent = numerics::LatentVector<f64>;
/// A fitted feature axis in 64-bit precision.
pub type Axis = axis::FeatureAxis<f64>;
/// A least-squares fit in 64-bit precision.
pub type Fit = numerics::RegressionFit<f64>;
/// A latent feature shifter in 64-bit precision.
pub type Shifter = shifter::ShifterModel<f64>;
/// A dense row-major matrix in 64-bit precision.
pub type Matrix = numerics::DenseMatrix<f64>;
