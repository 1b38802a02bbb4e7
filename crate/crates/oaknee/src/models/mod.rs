//! Classifier families (tiny CNN, shallow descriptor net, fused model,
//! L2 logistic regression) and the mini-batch SGD training loop.

pub mod logistic;
pub mod network;
pub mod train;

pub use logistic::{fit_logistic, LogisticModel};
pub use network::{composite_gradcheck, Arch, Combined, ConvBlock, Js2Net, Network, TinyCnn, HIDDEN, JS2_DIM, TRUNK_DIM};
pub use train::{train, Dataset, EpochStats, Standardizer, TrainConfig, TrainOutcome};

use crate::tensornet::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("model error: {0}")]
    Invalid(String),
}
