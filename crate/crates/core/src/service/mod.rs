//! The online listing pipeline and its HTTP API.

mod config;
mod http;
mod pipeline;

pub use config::{BackendKind, GenerationConfig, SafetyConfig, ServiceConfig};
pub use http::{parse_sse, router, router_with_ui, ChunkEvent, StreamTrailer};
pub use pipeline::{
    AdoptionMetrics, ListingPipeline, ListingRequest, ListingResponse, PipelineSettings, PipelineTrace,
    PreparedListing, RequestOptions, Stage, StageRecord,
};

use crate::attributes::AttributeError;
use crate::catalog::{CatalogError, DraftError};
use crate::prompt::PromptError;
use crate::retrieval::RetrievalError;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("image rejected by safety check: {0}")]
    UnsafeImage(String),
    #[error("draft {0} not found")]
    DraftNotFound(String),
    #[error("no such resource: {0}")]
    NotFound(String),
    #[error(transparent)]
    Draft(#[from] DraftError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Attributes(#[from] AttributeError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("config: {0}")]
    Config(String),
}

/// Serves the API until the process is stopped.
pub async fn serve(config: &ServiceConfig) -> Result<(), ServiceError> {
    let pipeline = std::sync::Arc::new(config.build_pipeline()?);
    let app = router_with_ui(pipeline, config.ui_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .map_err(|e| ServiceError::Config(format!("bind {}: {e}", config.bind)))?;
    axum::serve(listener, app)
        .await
        .map_err(|e| ServiceError::Config(format!("server: {e}")))
}
