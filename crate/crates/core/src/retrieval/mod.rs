//! Exact cosine vector search with SKU/SPU match levels, and a k-NN
//! category predictor behind the [`CategoryClassifier`] interface.

mod classify;
mod index;
pub mod sidecar;

pub use classify::{predict_category, CategoryClassifier, CategoryPrediction, KnnClassifier};
pub use index::{MatchLevel, MatchThresholds, RetrievalResult, SharedIndex, VectorIndex};
pub use sidecar::{load_index, read_index, save_index, write_index};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetrievalError {
    #[error("dimension mismatch for {id}: expected {expected}, got {actual}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("product {0} has no usable embedding")]
    MissingEmbedding(String),
    #[error("query vector has zero or non-finite norm")]
    DegenerateQuery,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("index is empty")]
    EmptyIndex,
    #[error("invalid thresholds: tau_identical={tau_identical}, tau_similar={tau_similar}")]
    InvalidThresholds { tau_identical: f64, tau_similar: f64 },
    #[error("index file: {0}")]
    Format(String),
}
