//! Small CNN over vortex-beam intensity images.

pub mod checkpoint;
pub mod error;
pub mod layers;
pub mod model;
pub mod optim;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, load_for_classes, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use error::{ClassifierError, Result};
pub use model::{backward, cross_entropy, dropout_mask, forward, logit_gradient, Architecture, Cache, Mode, Model, Params};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use tensor::{Real, Tensor};
pub use train::{
    evaluate, evaluate_split, prepare, train, train_examples, train_with_state, ConfusionMatrix, Evaluation, Example,
    Metrics, TrainConfig,
};
