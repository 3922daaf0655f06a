//! Desk-scale split learning: a small MLP cut between edge clients and a
//! server, trained over non-IID client shards with mean aggregation of the
//! client halves.

mod data;
mod gradcheck;
mod model;
mod train;

pub use data::{class_means, shard_by_class, synthetic_clusters, Dataset, DatasetSpec};
pub use gradcheck::{analytic_gradients, finite_diff_check};
pub use model::{
    aggregate, build_split_model, build_split_model_with, client_backward, client_forward,
    server_forward_backward, Activation, ClientModel, Dense, ForwardCache, LayerGrad, ModelSpec,
    OutputLoss, ServerGradients, ServerModel, SplitModel,
};
pub use train::{
    client_batch_seed, step_flops, train, train_on, BatchSchedule, FederationConfig, RoundEntry,
    TrainingTrace,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("split index {split} out of range for {layers} layers (need 1 <= split < layers)")]
    InvalidSplit { split: usize, layers: usize },
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("{what}: expected shape {expected:?}, got {got:?}")]
    Dimension {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("label {label} outside 0..{classes}")]
    InvalidLabel { label: usize, classes: usize },
    #[error("forward cache does not match the current client parameters")]
    StaleCache,
    #[error("parameter sets differ in shape")]
    ShapeMismatch,
    #[error("nothing to aggregate")]
    EmptyAggregation,
    #[error("training diverged in global round {round}")]
    Diverged { round: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}
