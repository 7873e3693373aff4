//! Generator and critic models, adversarial losses and the training loop.

mod config;
mod losses;
mod model;
mod train;

pub use config::{preset, preset_names, ArchitectureConfig, GeneratorKind, LossKind, NAMED_PRESETS};
pub use losses::{
    gradient_penalty, gradient_penalty_with_grad, vanilla_losses, wasserstein_from_scores,
    wasserstein_losses, PenaltyOutput, VanillaLosses, SCORE_CLAMP,
};
pub use model::{logits_to_dense, CriticModel, GeneratorModel, LOGIT_WIDTH};
pub use train::{
    train, Checkpoint, Instrumentation, CHECKPOINT_FORMAT, CHECKPOINT_VERSION, LogRecord, TrainOptions, TrainState, Trainer, TrainingLog,
    LOG_CSV_HEADER,
};

use crate::dataset::DatasetError;
use crate::metrics::MetricsError;
use crate::nn::NnError;
use crate::qsim::QsimError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GanError {
    #[error("invalid architecture: {0}")]
    InvalidConfig(String),
    #[error("unknown preset {name:?}; valid presets: {}", valid.join(", "))]
    UnknownPreset { name: String, valid: Vec<String> },
    #[error("latent vector has length {got}, expected {expected}")]
    LatentLength { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("real and fake batches differ in size: {0} vs {1}")]
    BatchMismatch(usize, usize),
    #[error("iterations must be positive")]
    ZeroIterations,
    #[error("non-finite {term} at iteration {iteration}")]
    NonFinite { iteration: u64, term: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
