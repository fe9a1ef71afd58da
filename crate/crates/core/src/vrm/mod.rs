//! Verification-aware reward model: a hashed text feature extractor standing in
//! for an encoder, a scoring head `h → s` and a weight head `[h; v] → w`, and
//! oracle-distillation training on `‖w − w*‖² + β‖s − s*‖²`.

mod features;
mod model;
mod oracle;
mod train;

use thiserror::Error;

pub use features::{extract_features, FeatureConfig, FeatureInput, EXTRACTOR_VERSION, STRUCTURED_FEATURES};
pub use model::{Head, ModelFile, PerHead, Prepared, VrmModel, MODEL_FORMAT, MODEL_VERSION};
pub use oracle::{build_oracle_dataset, TrainingExample};
pub use train::{prepare, train, train_prepared, train_steps, TrainConfig, TrainReport};

#[derive(Debug, Error)]
pub enum VrmError {
    #[error("feature vector has length {got}, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("model was built with feature extractor v{model}, this build has v{runtime}")]
    ExtractorMismatch { model: u32, runtime: u32 },
    #[error("bad model file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
