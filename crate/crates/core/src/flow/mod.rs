//! Flow matching over ligand coordinates with a harmonic prior and
//! self-conditioning, plus the joint residue-type process.

mod integrate;
mod loss;
mod network;
mod prior;
mod train;

pub use integrate::{entropy_trace, euler_integrate, FlowState, TracePoint, Trajectory};
pub use loss::{cross_entropy, mean_square_distance, LossReport, LossWeights};
pub use network::{mask_rows, FlowNetwork, NetInput, NetOutput, TYPE_SLOTS};
pub use prior::{harmonic_prior_sample, interpolate, HarmonicPrior, ZERO_EIGENVALUE};
pub use train::{sample_loss, train_step, SampleLoss, TrainConfig};

use alloc::string::String;

use crate::diff::DiffError;
use crate::linalg::EigenError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("prior eigendecomposition failed: {0}")]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("non-finite loss for sample {0}")]
    NonFiniteLoss(String),
    #[error("non-finite coordinates at integration step {0}")]
    NonFinite(usize),
    #[error("integration needs at least one step")]
    NoSteps,
    #[error("empty batch")]
    EmptyBatch,
}
