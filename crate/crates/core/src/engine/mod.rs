//! Sparse MLP numerics on compressed edge lists: forward, backward, updates,
//! training, pruning, gradient checking, histograms and checkpoints.

mod checkpoint;
mod gradcheck;
mod histogram;
mod model;
mod optim;
mod prune;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
};
pub use gradcheck::{grad_check, GradCheckReport, ParamId};
pub use histogram::{kurtosis, weight_histogram, Histogram};
pub use model::{
    cross_entropy, init_model, junction_backprop, junction_forward, Activation, Gradients,
    LayerState, SparseModel,
};
pub use optim::{update_step, Optimizer, OptimizerKind, StepParams, TrainConfig};
pub use prune::prune_threshold;
pub use train::{evaluate, train, train_with, write_history_csv, EpochRecord, History};

pub(crate) use model::activate;
pub(crate) use train::csv_err;
