//! The latent feature shifter: small MLPs mapping `concat(z, label)` to a
//! shifted latent, trained from scratch with Adam on an MSE loss.

mod adam;
mod arch;
mod io;
mod network;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use arch::{build_arch, param_count, Activation, ArchName, ArchSpec, Layer, LEAKY_SLOPE};
pub use network::{chain_shift, DenseParams, Gradients, ShifterModel};
pub use train::{evaluate_metrics, train, Metrics, TrainConfig, TrainHistory};
