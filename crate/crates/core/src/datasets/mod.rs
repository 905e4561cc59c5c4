//! Datasets: IDX ingestion, feature padding, PCA and synthetic fixtures.

mod dataset;
mod idx;
mod pca;
mod synthetic;

pub use dataset::{pad_features, Dataset, Split};
pub use idx::{
    load_idx, load_mnist, read_idx, save_idx, write_idx, IdxArray, IdxType, MNIST_VALIDATION_SIZE,
};
pub use pca::{pca_reduce, Pca};
pub use synthetic::synthetic_dataset;
