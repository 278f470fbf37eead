//! Optimization: losses, sparse Adam, checkpoints and the training loop.

pub mod adam;
pub mod checkpoint;
pub mod config;
pub mod loss;
pub mod sweep;
pub mod trainer;

pub use adam::AdamState;
pub use checkpoint::Checkpoint;
pub use config::{default_grid, Paradigm, TrainConfig, CONFIG_KEYS};
pub use loss::{
    example_loss, example_loss_and_grad, prepare_example, Example, ExampleLoss, LossConfig,
};
pub use sweep::{apply_point, expand_grid, parse_grid, reference_sweep, Grid};
pub use trainer::{LogLine, StepStats, TrainSummary, Trainer, TrainingData};
